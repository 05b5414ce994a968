use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::dictionary::{BlockId, BlockSet, Family, SignalDictionary};
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::scaffold::{FisherRows, HyperConfig};
use crate::search::{evaluate_split, Grids};
use crate::split::Split;
use crate::stats::{mean, Conventions};

/// Intervention applied to the full scaffold. Block variants shrink the
/// dictionary; branch variants pin the fusion weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    RawOnly,
    NoHighPass,
    NoP3x,
    NoSym,
    PcaOnly,
    RidgeOnly,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Full,
        Variant::RawOnly,
        Variant::NoHighPass,
        Variant::NoP3x,
        Variant::NoSym,
        Variant::PcaOnly,
        Variant::RidgeOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::RawOnly => "raw_only",
            Variant::NoHighPass => "no_high_pass",
            Variant::NoP3x => "no_p3x",
            Variant::NoSym => "no_sym",
            Variant::PcaOnly => "pca_only",
            Variant::RidgeOnly => "ridge_only",
        }
    }

    pub fn blocks(self) -> BlockSet {
        let keep = |f: &dyn Fn(BlockId) -> bool| {
            BlockSet::new(BlockId::ALL.into_iter().filter(|&b| f(b))).expect("variant keeps a block")
        };
        match self {
            Variant::Full | Variant::PcaOnly | Variant::RidgeOnly => BlockSet::all(),
            Variant::RawOnly => keep(&|b| b == BlockId::X),
            Variant::NoHighPass => keep(&|b| b.family() != Family::High),
            Variant::NoP3x => keep(&|b| b != BlockId::Prow3X),
            Variant::NoSym => keep(&|b| !matches!(b, BlockId::PsymX | BlockId::Psym2X | BlockId::XMinusPsymX)),
        }
    }

    pub fn w_override(self) -> Option<Vec<f64>> {
        match self {
            Variant::PcaOnly => Some(vec![1.0]),
            Variant::RidgeOnly => Some(vec![0.0]),
            _ => None,
        }
    }

    pub fn grids(self, base: &Grids) -> Grids {
        let mut g = base.clone();
        if let Some(w) = self.w_override() {
            g.w = w;
        }
        g
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::input(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRun {
    pub variant: Variant,
    /// Test accuracy per repeat, aligned with the split list.
    pub accuracies: Vec<f64>,
    pub configs: Vec<HyperConfig>,
    pub mean: f64,
}

/// Runs a variant over the same splits as the full scaffold.
#[allow(clippy::too_many_arguments)]
pub fn run_variant(
    g: &SparseGraph,
    x: ArrayView2<'_, f64>,
    labels: &[Option<usize>],
    splits: &[Split],
    variant: Variant,
    grids: &Grids,
    conventions: Conventions,
    fisher_rows: FisherRows,
) -> Result<VariantRun> {
    let dict = SignalDictionary::build(g, x, &variant.blocks())?;
    let grids = variant.grids(grids);
    let mut accuracies = Vec::with_capacity(splits.len());
    let mut configs = Vec::with_capacity(splits.len());
    for split in splits {
        let (search, _, acc) = evaluate_split(&dict, labels, split, &grids, conventions, fisher_rows)?;
        accuracies.push(acc);
        configs.push(search.config);
    }
    Ok(VariantRun {
        variant,
        mean: mean(&accuracies).unwrap_or(0.0),
        accuracies,
        configs,
    })
}
