//! Class-wise PCA subspaces and the affine-subspace residual score.
//!
//! A class is decomposed once (centering plus thin SVD); truncation to a
//! given `(r_max, eta)` is then a cheap prefix operation. Basis vectors are
//! stored as rows so every projection coordinate is a contiguous dot product,
//! which keeps residuals bit-identical no matter how many directions are kept.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Full spectral decomposition of one centered class matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecomposition {
    pub class: usize,
    pub n_members: usize,
    pub center: Array1<f64>,
    /// Retained singular values, descending.
    pub singular_values: Vec<f64>,
    /// Right singular vectors as rows, aligned with `singular_values`.
    pub directions: Array2<f64>,
}

impl ClassDecomposition {
    pub fn fit(class: usize, rows: ArrayView2<'_, f64>) -> Result<Self> {
        let n_members = rows.nrows();
        if n_members == 0 {
            return Err(Error::input(format!("class {class} has no training rows")));
        }
        let k = rows.ncols();
        let center = rows.mean_axis(Axis(0)).unwrap();
        let centered = &rows - &center;

        let (mut singular_values, mut directions) = if n_members < 2 || k == 0 {
            (Vec::new(), Array2::zeros((0, k)))
        } else {
            thin_svd(centered.view())?
        };
        let sigma_max = singular_values.first().copied().unwrap_or(0.0);
        let keep = singular_values
            .iter()
            .take_while(|&&s| sigma_max > 0.0 && s >= RANK_CUTOFF * sigma_max)
            .count();
        singular_values.truncate(keep);
        directions = directions.slice_move(ndarray::s![..keep, ..]);
        Ok(Self {
            class,
            n_members,
            center,
            singular_values,
            directions,
        })
    }

    /// Subspace dimension for an energy threshold and a dimension cap:
    /// the smallest `r` reaching `eta` of the total squared spectrum, then
    /// clipped to `r_max`, `n_c - 1` and `K`.
    pub fn select_rank(&self, r_max: usize, eta: f64) -> (usize, f64) {
        let energies: Vec<f64> = self.singular_values.iter().map(|s| s * s).collect();
        let total: f64 = energies.iter().sum();
        if total <= 0.0 {
            return (0, 0.0);
        }
        let mut cum = 0.0;
        let mut r_energy = energies.len();
        for (r, e) in energies.iter().enumerate() {
            cum += e;
            if cum >= eta * total * (1.0 - 1e-12) {
                r_energy = r + 1;
                break;
            }
        }
        let r = r_energy
            .min(r_max)
            .min(self.n_members.saturating_sub(1))
            .min(self.center.len());
        let kept: f64 = energies[..r].iter().sum();
        (r, kept / total)
    }

    pub fn truncate(&self, r_max: usize, eta: f64) -> ClassSubspace {
        let (r, energy_fraction) = self.select_rank(r_max, eta);
        ClassSubspace {
            class: self.class,
            n_members: self.n_members,
            center: self.center.clone(),
            basis_rows: self.directions.slice(ndarray::s![..r, ..]).to_owned(),
            rank: r,
            energy_fraction,
        }
    }
}

/// Thin SVD of `m`, returning singular values (descending) and the matching
/// right singular vectors as rows, each signed so its largest-magnitude entry
/// is positive.
fn thin_svd(m: ArrayView2<'_, f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let (rows, cols) = m.dim();
    let mat = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[[i, j]]);
    let svd = mat
        .thin_svd()
        .map_err(|e| Error::Solve(format!("class SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let v = svd.V();
    let mut order: Vec<usize> = (0..s.nrows()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| s[i]).collect();
    let mut dirs = Array2::zeros((order.len(), cols));
    for (r, &i) in order.iter().enumerate() {
        let mut pivot = 0;
        for j in 1..cols {
            if v[(j, i)].abs() > v[(pivot, i)].abs() {
                pivot = j;
            }
        }
        let sign = if v[(pivot, i)] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..cols {
            dirs[[r, j]] = sign * v[(j, i)];
        }
    }
    Ok((values, dirs))
}

/// Affine subspace `mu_c + span(B_c)` of one training-present class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSubspace {
    pub class: usize,
    pub n_members: usize,
    pub center: Array1<f64>,
    /// `B_c^T`, shape `r_c x K`.
    pub basis_rows: Array2<f64>,
    pub rank: usize,
    pub energy_fraction: f64,
}

impl ClassSubspace {
    /// `B_c` with orthonormal columns, shape `K x r_c`.
    pub fn basis(&self) -> ArrayView2<'_, f64> {
        self.basis_rows.t()
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `||(I - B B^T)(f - mu)||^2`, evaluated as `||v||^2 - ||B^T v||^2`.
    pub fn residual(&self, f: ArrayView1<'_, f64>) -> f64 {
        let v = &f - &self.center;
        let total = v.dot(&v);
        let mut captured = 0.0;
        for b in self.basis_rows.rows() {
            let c = b.dot(&v);
            captured += c * c;
        }
        (total - captured).max(0.0)
    }
}

/// Fits one subspace per class present in `train_labels`, in ascending class
/// order.
pub fn fit_class_subspaces(
    f_train: ArrayView2<'_, f64>,
    train_labels: &[usize],
    r_max: usize,
    eta: f64,
) -> Result<Vec<ClassSubspace>> {
    check_hyper(r_max, eta)?;
    Ok(decompose_classes(f_train, train_labels)?
        .iter()
        .map(|d| d.truncate(r_max, eta))
        .collect())
}

pub(crate) fn check_hyper(r_max: usize, eta: f64) -> Result<()> {
    if r_max == 0 {
        return Err(Error::input("r_max must be at least 1"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::input(format!("energy threshold {eta} outside (0, 1]")));
    }
    Ok(())
}

/// Decomposes every training-present class, ascending by class id.
pub fn decompose_classes(f_train: ArrayView2<'_, f64>, train_labels: &[usize]) -> Result<Vec<ClassDecomposition>> {
    if f_train.nrows() != train_labels.len() {
        return Err(Error::Shape {
            expected: format!("{} training labels", f_train.nrows()),
            got: format!("{}", train_labels.len()),
        });
    }
    let classes = present_classes(train_labels);
    use rayon::prelude::*;
    classes
        .par_iter()
        .map(|&c| {
            let members: Vec<usize> = train_labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == c)
                .map(|(i, _)| i)
                .collect();
            ClassDecomposition::fit(c, f_train.select(Axis(0), &members).view())
        })
        .collect()
}

/// Sorted distinct labels.
pub fn present_classes(labels: &[usize]) -> Vec<usize> {
    let mut c = labels.to_vec();
    c.sort_unstable();
    c.dedup();
    c
}

/// `R_pca[i, c]` for every row of `f` and every subspace, columns in the
/// order of `subspaces`.
pub fn pca_residuals(f: ArrayView2<'_, f64>, subspaces: &[ClassSubspace]) -> Result<Array2<f64>> {
    if let Some(s) = subspaces.iter().find(|s| s.dim() != f.ncols()) {
        return Err(Error::Shape {
            expected: format!("{} columns", s.dim()),
            got: format!("{} columns", f.ncols()),
        });
    }
    let mut out = Array2::zeros((f.nrows(), subspaces.len()));
    for (c, s) in subspaces.iter().enumerate() {
        for (i, row) in f.rows().into_iter().enumerate() {
            out[[i, c]] = s.residual(row);
        }
    }
    Ok(out)
}

/// Projection coordinates of every node onto a class's full retained
/// spectrum, so residuals for any rank are prefix sums.
#[derive(Debug, Clone)]
pub(crate) struct ProjectedClass {
    sq_norm: Vec<f64>,
    /// n x rank_full
    coords: Array2<f64>,
}

impl ProjectedClass {
    pub(crate) fn new(f: ArrayView2<'_, f64>, dec: &ClassDecomposition, max_rank: usize) -> Self {
        let r_full = dec.directions.nrows().min(max_rank);
        let mut sq_norm = Vec::with_capacity(f.nrows());
        let mut coords = Array2::zeros((f.nrows(), r_full));
        for (i, row) in f.rows().into_iter().enumerate() {
            let v = &row - &dec.center;
            sq_norm.push(v.dot(&v));
            for (k, b) in dec.directions.rows().into_iter().take(r_full).enumerate() {
                coords[[i, k]] = b.dot(&v);
            }
        }
        Self { sq_norm, coords }
    }

    pub(crate) fn residual(&self, i: usize, rank: usize) -> f64 {
        let mut captured = 0.0;
        for k in 0..rank {
            let c = self.coords[[i, k]];
            captured += c * c;
        }
        (self.sq_norm[i] - captured).max(0.0)
    }

    pub(crate) fn max_rank(&self) -> usize {
        self.coords.ncols()
    }
}
