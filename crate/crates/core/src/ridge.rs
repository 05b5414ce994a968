//! Closed-form multi-alpha ridge boundary in dual (kernel) form.
//!
//! For each alpha, `beta = (F_tr F_tr^T + alpha I)^-1 Y` over the training
//! nodes. Scores for arbitrary rows are `F F_tr^T beta`; we keep the folded
//! weights `F_tr^T beta` so scoring never needs the training matrix again.
//! Each alpha's scores are divided by their spread over the training rows,
//! negated, and averaged so that smaller is better.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::StdMode;
use crate::subspace::present_classes;

/// Ridge solution for a single alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaFit {
    pub alpha: f64,
    /// `n_tr x C`
    pub dual: Array2<f64>,
    /// `(F_tr^T dual)^T`, `C x K`, one contiguous row per class.
    pub weights: Array2<f64>,
    /// Spread of the training scores.
    pub sigma: f64,
    /// Jitter added to the diagonal, 0 unless the first factorization failed.
    pub jitter: f64,
}

impl AlphaFit {
    /// `Z = F F_tr^T beta`, `n x C`.
    pub fn scores(&self, f: ArrayView2<'_, f64>) -> Array2<f64> {
        row_scores(f, self.weights.view())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    /// Training-present classes, ascending; the column order of every score.
    pub classes: Vec<usize>,
    pub fits: Vec<AlphaFit>,
}

/// Precomputed training Gram matrix and one-hot targets, shared by every alpha.
pub struct RidgeProblem<'a> {
    f_train: ArrayView2<'a, f64>,
    gram: Mat<f64>,
    targets: Mat<f64>,
    classes: Vec<usize>,
}

impl<'a> RidgeProblem<'a> {
    pub fn new(f_train: ArrayView2<'a, f64>, train_labels: &[usize]) -> Result<Self> {
        let n = f_train.nrows();
        if n == 0 {
            return Err(Error::input("empty training set"));
        }
        if n != train_labels.len() {
            return Err(Error::Shape {
                expected: format!("{n} training labels"),
                got: format!("{}", train_labels.len()),
            });
        }
        let classes = present_classes(train_labels);
        let gram_nd = f_train.dot(&f_train.t());
        let gram = Mat::from_fn(n, n, |i, j| gram_nd[[i, j]]);
        let targets = Mat::from_fn(
            n,
            classes.len(),
            |i, c| {
                if train_labels[i] == classes[c] {
                    1.0
                } else {
                    0.0
                }
            },
        );
        Ok(Self {
            f_train,
            gram,
            targets,
            classes,
        })
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn solve(&self, alpha: f64, std_mode: StdMode) -> Result<AlphaFit> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::input(format!("ridge alpha must be positive, got {alpha}")));
        }
        let n = self.gram.nrows();
        let trace: f64 = (0..n).map(|i| self.gram[(i, i)]).sum();
        let mut jitter = 0.0;
        let dual = loop {
            let mut system = self.gram.clone();
            for i in 0..n {
                system[(i, i)] += alpha + jitter;
            }
            match system.llt(Side::Lower) {
                Ok(chol) => break chol.solve(&self.targets),
                Err(_) if jitter == 0.0 => {
                    jitter = (1e-10 * trace / n as f64).max(f64::MIN_POSITIVE);
                }
                Err(_) => {
                    return Err(Error::Solve(format!(
                        "ridge system not positive definite for alpha {alpha}"
                    )))
                }
            }
        };
        let dual = Array2::from_shape_fn((n, self.classes.len()), |(i, c)| dual[(i, c)]);
        let weights = dual.t().dot(&self.f_train);
        let train_scores = row_scores(self.f_train, weights.view());
        let sigma = std_mode.std(train_scores.iter());
        Ok(AlphaFit {
            alpha,
            dual,
            weights,
            sigma,
            jitter,
        })
    }
}

pub fn fit_ridge(
    f_train: ArrayView2<'_, f64>,
    train_labels: &[usize],
    alphas: &[f64],
    std_mode: StdMode,
) -> Result<RidgeModel> {
    if alphas.is_empty() {
        return Err(Error::input("empty alpha set"));
    }
    let problem = RidgeProblem::new(f_train, train_labels)?;
    let fits = alphas
        .iter()
        .map(|&a| problem.solve(a, std_mode))
        .collect::<Result<Vec<_>>>()?;
    Ok(RidgeModel {
        classes: problem.classes,
        fits,
    })
}

impl RidgeModel {
    pub fn input_dim(&self) -> usize {
        self.fits.first().map_or(0, |f| f.weights.ncols())
    }

    /// Residual-like ridge score, `n x C`, smaller is better.
    pub fn scores(&self, f: ArrayView2<'_, f64>, epsilon: f64) -> Result<Array2<f64>> {
        if f.ncols() != self.input_dim() {
            return Err(Error::Shape {
                expected: format!("{} columns", self.input_dim()),
                got: format!("{} columns", f.ncols()),
            });
        }
        let per_alpha: Vec<(Array2<f64>, f64)> = self.fits.iter().map(|a| (a.scores(f), a.sigma)).collect();
        Ok(combine_alpha_scores(
            per_alpha.iter().map(|(z, s)| (z.view(), *s)),
            f.nrows(),
            self.classes.len(),
            epsilon,
        ))
    }
}

/// Per-element dot products of each row of `f` with each row of `weights`.
/// Every entry is an independent contiguous dot product, so a node's score
/// does not depend on which other rows are scored alongside it.
pub(crate) fn row_scores(f: ArrayView2<'_, f64>, weights: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = Array2::zeros((f.nrows(), weights.nrows()));
    for (i, row) in f.rows().into_iter().enumerate() {
        for (c, w) in weights.rows().into_iter().enumerate() {
            out[[i, c]] = row.dot(&w);
        }
    }
    out
}

/// `-(1/|A|) sum_alpha Z_alpha / (sigma_alpha + eps)`, summed in the given order.
pub(crate) fn combine_alpha_scores<'a>(
    per_alpha: impl IntoIterator<Item = (ArrayView2<'a, f64>, f64)>,
    n: usize,
    n_classes: usize,
    epsilon: f64,
) -> Array2<f64> {
    let mut acc = Array2::<f64>::zeros((n, n_classes));
    let mut count = 0usize;
    for (z, sigma) in per_alpha {
        let denom = sigma + epsilon;
        acc.zip_mut_with(&z, |a, &v| *a += v / denom);
        count += 1;
    }
    let scale = -1.0 / count as f64;
    acc.mapv_inplace(|a| a * scale);
    acc
}
