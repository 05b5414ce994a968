//! Nine-block graph-signal dictionary.
//!
//! Blocks, in order: `X, P_row X, P_row^2 X, P_row^3 X, X - P_row X,
//! P_row X - P_row^2 X, P_sym X, P_sym^2 X, X - P_sym X`. Each block is
//! row-L2 normalized on its own before concatenation; all-zero rows stay zero.

use std::fmt;
use std::str::FromStr;

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Raw,
    Low,
    High,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Raw, Family::Low, Family::High];

    pub fn name(self) -> &'static str {
        match self {
            Family::Raw => "raw",
            Family::Low => "low",
            Family::High => "high",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BlockId {
    X,
    ProwX,
    Prow2X,
    Prow3X,
    XMinusProwX,
    ProwXMinusProw2X,
    PsymX,
    Psym2X,
    XMinusPsymX,
}

impl BlockId {
    pub const ALL: [BlockId; 9] = [
        BlockId::X,
        BlockId::ProwX,
        BlockId::Prow2X,
        BlockId::Prow3X,
        BlockId::XMinusProwX,
        BlockId::ProwXMinusProw2X,
        BlockId::PsymX,
        BlockId::Psym2X,
        BlockId::XMinusPsymX,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<BlockId> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            BlockId::X => "X",
            BlockId::ProwX => "ProwX",
            BlockId::Prow2X => "Prow2X",
            BlockId::Prow3X => "Prow3X",
            BlockId::XMinusProwX => "X-ProwX",
            BlockId::ProwXMinusProw2X => "ProwX-Prow2X",
            BlockId::PsymX => "PsymX",
            BlockId::Psym2X => "Psym2X",
            BlockId::XMinusPsymX => "X-PsymX",
        }
    }

    pub fn family(self) -> Family {
        match self {
            BlockId::X => Family::Raw,
            BlockId::ProwX | BlockId::Prow2X | BlockId::Prow3X | BlockId::PsymX | BlockId::Psym2X => Family::Low,
            BlockId::XMinusProwX | BlockId::ProwXMinusProw2X | BlockId::XMinusPsymX => Family::High,
        }
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BlockId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BlockId::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::input(format!("unknown block name {s:?}")))
    }
}

/// Ordered, duplicate-free subset of the nine blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockSet(Vec<BlockId>);

impl BlockSet {
    pub fn all() -> Self {
        Self(BlockId::ALL.to_vec())
    }

    pub fn new(blocks: impl IntoIterator<Item = BlockId>) -> Result<Self> {
        let mut v: Vec<BlockId> = blocks.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() {
            return Err(Error::input("active block set is empty"));
        }
        Ok(Self(v))
    }

    /// Parses a comma-separated list of block names, or `all`.
    pub fn parse(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Self::all());
        }
        Self::new(
            s.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(str::parse)
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn contains(&self, b: BlockId) -> bool {
        self.0.contains(&b)
    }

    pub fn blocks(&self) -> &[BlockId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn family_count(&self, g: Family) -> usize {
        self.0.iter().filter(|b| b.family() == g).count()
    }
}

impl Default for BlockSet {
    fn default() -> Self {
        Self::all()
    }
}

impl fmt::Display for BlockSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.0.iter().map(|b| b.name()).collect();
        f.write_str(&names.join(","))
    }
}

/// The block-normalized dictionary `F0` with per-coordinate block identity.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalDictionary {
    features: Array2<f64>,
    d: usize,
    active: BlockSet,
    coord_block: Vec<BlockId>,
}

impl SignalDictionary {
    pub fn build(g: &SparseGraph, x: ArrayView2<'_, f64>, active: &BlockSet) -> Result<Self> {
        if active.is_empty() {
            return Err(Error::input("active block set is empty"));
        }
        if x.nrows() != g.n() {
            return Err(Error::Shape {
                expected: format!("{} feature rows", g.n()),
                got: format!("{} feature rows", x.nrows()),
            });
        }
        if let Some(((i, j), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::input(format!("non-finite feature {v} at ({i}, {j})")));
        }
        let d = x.ncols();

        let need_row = active
            .blocks()
            .iter()
            .any(|b| !matches!(b, BlockId::X | BlockId::PsymX | BlockId::Psym2X | BlockId::XMinusPsymX));
        let need_sym = active
            .blocks()
            .iter()
            .any(|b| matches!(b, BlockId::PsymX | BlockId::Psym2X | BlockId::XMinusPsymX));

        let x = x.to_owned();
        let (p1, p2, p3) = if need_row {
            let op = g.row_operator();
            let p1 = op.propagate(x.view())?;
            let p2 = op.propagate(p1.view())?;
            let p3 = if active.contains(BlockId::Prow3X) {
                Some(op.propagate(p2.view())?)
            } else {
                None
            };
            (Some(p1), Some(p2), p3)
        } else {
            (None, None, None)
        };
        let (s1, s2) = if need_sym {
            let op = g.sym_operator();
            let s1 = op.propagate(x.view())?;
            let s2 = if active.contains(BlockId::Psym2X) {
                Some(op.propagate(s1.view())?)
            } else {
                None
            };
            (Some(s1), s2)
        } else {
            (None, None)
        };

        let mut blocks = Vec::with_capacity(active.len());
        for &b in active.blocks() {
            let raw = match b {
                BlockId::X => x.clone(),
                BlockId::ProwX => p1.clone().unwrap(),
                BlockId::Prow2X => p2.clone().unwrap(),
                BlockId::Prow3X => p3.clone().unwrap(),
                BlockId::XMinusProwX => &x - p1.as_ref().unwrap(),
                BlockId::ProwXMinusProw2X => p1.as_ref().unwrap() - p2.as_ref().unwrap(),
                BlockId::PsymX => s1.clone().unwrap(),
                BlockId::Psym2X => s2.clone().unwrap(),
                BlockId::XMinusPsymX => &x - s1.as_ref().unwrap(),
            };
            blocks.push(row_normalize(raw));
        }
        let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
        let features = concatenate(Axis(1), &views).map_err(|e| Error::input(e.to_string()))?;
        let coord_block = active
            .blocks()
            .iter()
            .flat_map(|&b| std::iter::repeat_n(b, d))
            .collect();
        Ok(Self {
            features,
            d,
            active: active.clone(),
            coord_block,
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    /// Dictionary width `p`.
    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    /// Base feature width.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn active(&self) -> &BlockSet {
        &self.active
    }

    pub fn coord_block(&self) -> &[BlockId] {
        &self.coord_block
    }

    pub fn block_slice(&self, b: BlockId) -> Result<ArrayView2<'_, f64>> {
        let pos = self
            .active
            .blocks()
            .iter()
            .position(|&a| a == b)
            .ok_or(Error::InactiveBlock(b.name()))?;
        Ok(self.features.slice(s![.., pos * self.d..(pos + 1) * self.d]))
    }

    /// Approximate resident size of the dense matrix in bytes.
    pub fn memory_bytes(&self) -> usize {
        self.features.len() * std::mem::size_of::<f64>()
    }
}

/// Scales each row to unit L2 norm; zero rows are left as they are.
pub fn row_normalize(mut m: Array2<f64>) -> Array2<f64> {
    for mut row in m.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    m
}
