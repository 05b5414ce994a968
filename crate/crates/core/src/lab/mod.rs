//! Controlled experiments around the scaffold: block/branch interventions,
//! label-free prototype graph constructions, and paired-split statistics.

pub mod paired;
pub mod prototype;
pub mod variants;

pub use paired::{paired_stats, paired_stats_from_deltas, EffectSize, PairedResult};
pub use prototype::{degree_preserving_rewire, mutual_knn_densify, RewireMethod, RewireOutcome};
pub use variants::{run_variant, Variant, VariantRun};
