//! Supervised Fisher scoring of dictionary coordinates and top-K selection.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dictionary::BlockId;
use crate::error::{Error, Result};

/// Denominator guard shared by every ratio in the pipeline.
pub const EPSILON: f64 = 1e-12;

/// Between-class over within-class scatter per column of `f0`, using only the
/// rows in `train`. `train_labels[k]` is the class of node `train[k]`.
///
/// Classes with no training members do not enter either sum.
pub fn fisher_scores(
    f0: ArrayView2<'_, f64>,
    train: &[usize],
    train_labels: &[usize],
    epsilon: f64,
) -> Result<Array1<f64>> {
    if train.is_empty() {
        return Err(Error::input("empty training set"));
    }
    if train.len() != train_labels.len() {
        return Err(Error::Shape {
            expected: format!("{} training labels", train.len()),
            got: format!("{}", train_labels.len()),
        });
    }
    if let Some(&i) = train.iter().find(|&&i| i >= f0.nrows()) {
        return Err(Error::input(format!("training node {i} out of range")));
    }
    let n_classes = train_labels.iter().max().unwrap() + 1;
    let p = f0.ncols();

    let mut counts = vec![0usize; n_classes];
    let mut class_sum = Array2::<f64>::zeros((n_classes, p));
    for (&i, &c) in train.iter().zip(train_labels) {
        counts[c] += 1;
        class_sum.row_mut(c).scaled_add(1.0, &f0.row(i));
    }
    let overall = class_sum.sum_axis(Axis(0)) / train.len() as f64;
    let mut class_mean = class_sum;
    for (c, mut row) in class_mean.rows_mut().into_iter().enumerate() {
        if counts[c] > 0 {
            row /= counts[c] as f64;
        }
    }

    let mut within = Array1::<f64>::zeros(p);
    for (&i, &c) in train.iter().zip(train_labels) {
        let mu = class_mean.row(c);
        for ((w, &v), &m) in within.iter_mut().zip(f0.row(i)).zip(mu) {
            let dev = v - m;
            *w += dev * dev;
        }
    }

    let mut between = Array1::<f64>::zeros(p);
    for (c, &nc) in counts.iter().enumerate() {
        if nc == 0 {
            continue;
        }
        for ((b, &m), &mu) in between.iter_mut().zip(class_mean.row(c)).zip(&overall) {
            let dev = m - mu;
            *b += nc as f64 * dev * dev;
        }
    }
    Ok(Array1::from_iter(
        between.iter().zip(&within).map(|(&b, &w)| b / (w + epsilon)),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherSelection {
    /// Sorted ascending.
    pub selected: Vec<usize>,
    pub k_requested: usize,
    pub k_eff: usize,
}

/// Indices of the `min(k, p)` largest scores, ties broken by lower index,
/// returned in ascending index order.
pub fn select_top_k(scores: &[f64], k: usize) -> FisherSelection {
    let mut order = rank_coordinates(scores);
    let k_eff = k.min(scores.len());
    order.truncate(k_eff);
    order.sort_unstable();
    FisherSelection {
        selected: order,
        k_requested: k,
        k_eff,
    }
}

/// Every coordinate ordered by (score desc, index asc). Prefixes of this
/// ranking are the top-K sets for every K.
pub fn rank_coordinates(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Column gather `F0[:, S]` plus the block identity of each kept column.
pub fn restrict(f0: ArrayView2<'_, f64>, coord_block: &[BlockId], selected: &[usize]) -> (Array2<f64>, Vec<BlockId>) {
    let f = f0.select(Axis(1), selected);
    let blocks = selected.iter().map(|&j| coord_block[j]).collect();
    (f, blocks)
}
