//! Graph node classification from an explicit graph-signal dictionary.
//!
//! The pipeline builds nine named signal blocks from a graph and its node
//! features, keeps the most class-discriminative coordinates by Fisher score,
//! and classifies by fusing two transparent scores: residuals to class-wise
//! PCA subspaces and a closed-form multi-alpha ridge boundary. Every fitted
//! quantity can be read back, which is what the node atlas and dataset
//! fingerprints in [`atlas`] are built from.

pub mod atlas;
pub mod dictionary;
pub mod error;
pub mod fisher;
pub mod graph;
pub mod io;
pub mod lab;
pub mod report;
pub mod ridge;
pub mod scaffold;
pub mod search;
pub mod split;
pub mod stats;
pub mod subspace;
pub mod synth;

pub use error::{Error, Result};
