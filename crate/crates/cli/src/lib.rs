//! Command implementations behind the `sigatlas` binary. Each command reads
//! neutral CSV/binary inputs and writes JSON and CSV reports into a single
//! output directory.

pub mod config;
pub mod inspect;
pub mod lab;
pub mod run;

pub use config::{DataPaths, RunConfig};
