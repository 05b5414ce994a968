//! Class-balanced random train/validation/test splits.
//!
//! Randomness comes from a ChaCha8 generator seeded with `seed + repeat`, so
//! a split is reproducible from `(labels, spec)` on every platform.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SplitMode {
    /// Fixed train/val counts per class; everything else is test.
    PerClass {
        train_per_class: usize,
        val_per_class: usize,
    },
    /// Stratified fractions of the labeled nodes.
    Fraction { train: f64, val: f64, test: f64 },
}

impl SplitMode {
    pub fn per_class_default() -> Self {
        SplitMode::PerClass {
            train_per_class: 20,
            val_per_class: 30,
        }
    }

    pub fn fraction_default() -> Self {
        SplitMode::Fraction {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SplitMode::PerClass { .. } => "per-class",
            SplitMode::Fraction { .. } => "fraction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub seed: u64,
    pub repeat: usize,
}

impl SplitSpec {
    pub fn effective_seed(&self) -> u64 {
        self.seed.wrapping_add(self.repeat as u64)
    }

    pub fn with_repeat(mut self, repeat: usize) -> Self {
        self.repeat = repeat;
        self
    }
}

/// Disjoint node index lists, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits the labeled nodes. The class set is `0..=max label`; a class id in
/// that range with no labeled node is an error.
pub fn make_split(labels: &[Option<usize>], spec: &SplitSpec) -> Result<Split> {
    let n_classes = labels.iter().flatten().max().map_or(0, |m| m + 1);
    if n_classes == 0 {
        return Err(Error::input("no labeled nodes"));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, l) in labels.iter().enumerate() {
        if let Some(c) = l {
            members[*c].push(i);
        }
    }
    if let Some(c) = members.iter().position(Vec::is_empty) {
        return Err(Error::ClassTooSmall { class: c, available: 0 });
    }
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let quotas = match spec.mode {
        SplitMode::PerClass {
            train_per_class,
            val_per_class,
        } => {
            if train_per_class == 0 {
                return Err(Error::input("train_per_class must be at least 1"));
            }
            per_class_quotas(&sizes, train_per_class, val_per_class)
        }
        SplitMode::Fraction { train, val, test } => {
            for f in [train, val, test] {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::input(format!("split fraction {f} outside [0, 1]")));
                }
            }
            if train <= 0.0 || train + val + test > 1.0 + 1e-9 {
                return Err(Error::input(format!(
                    "split fractions {train}/{val}/{test} must have positive train and sum to at most 1"
                )));
            }
            fraction_quotas(&sizes, val, test)
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.effective_seed());
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (nodes, (n_tr, n_va)) in members.iter_mut().zip(quotas) {
        nodes.shuffle(&mut rng);
        split.train.extend_from_slice(&nodes[..n_tr]);
        split.val.extend_from_slice(&nodes[n_tr..n_tr + n_va]);
        split.test.extend_from_slice(&nodes[n_tr + n_va..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Exact counts when a class can supply them, otherwise a proportional floor
/// keeping at least one training member.
fn per_class_quotas(sizes: &[usize], tr: usize, va: usize) -> Vec<(usize, usize)> {
    sizes
        .iter()
        .map(|&n| {
            if n >= tr + va {
                (tr, va)
            } else {
                let n_tr = (n * tr / (tr + va)).max(1);
                let n_va = (n * va / (tr + va)).min(n - n_tr);
                (n_tr, n_va)
            }
        })
        .collect()
}

/// Global test/val counts are `ceil(fraction * N)`, apportioned over classes
/// by largest remainder; training takes the rest. Each class keeps at least
/// one training member.
fn fraction_quotas(sizes: &[usize], val: f64, test: f64) -> Vec<(usize, usize)> {
    let total: usize = sizes.iter().sum();
    let n_test = (test * total as f64 - 1e-9).ceil().max(0.0) as usize;
    let n_val = (val * total as f64 - 1e-9).ceil().max(0.0) as usize;
    let test_q = apportion(n_test, sizes);
    let val_q = apportion(n_val, sizes);
    sizes
        .iter()
        .zip(test_q.iter().zip(&val_q))
        .map(|(&n, (&t, &v))| {
            let t = t.min(n - 1);
            let v = v.min(n - 1 - t);
            (n - t - v, v)
        })
        .collect()
}

/// Hamilton apportionment of `seats` proportional to `sizes`; remainders go
/// to the largest fractional parts, ties to the lower class id.
fn apportion(seats: usize, sizes: &[usize]) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return vec![0; sizes.len()];
    }
    let mut out: Vec<usize> = sizes.iter().map(|&s| seats * s / total).collect();
    let mut rem: Vec<(usize, usize)> = sizes
        .iter()
        .enumerate()
        .map(|(c, &s)| ((seats * s) % total, c))
        .collect();
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let left = seats - out.iter().sum::<usize>();
    for &(_, c) in rem.iter().take(left) {
        out[c] += 1;
    }
    out
}
