//! Independent reference implementations and random instance builders shared
//! by the integration tests and the acceptance runner.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sigatlas_core::dictionary::SignalDictionary;
use sigatlas_core::graph::SparseGraph;
use sigatlas_core::scaffold::{fit_dictionary, FittedScaffold, HyperConfig, LabeledNodes};
use sigatlas_core::search::Grids;
use sigatlas_core::stats::Conventions;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, d), || StandardNormal.sample(rng))
}

/// Erdos-Renyi edge list.
pub fn random_edges(rng: &mut impl Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                e.push((u, v));
            }
        }
    }
    e
}

/// Labels with every class present at least twice when `n >= 2 * c`.
pub fn random_labels(rng: &mut impl Rng, n: usize, c: usize) -> Vec<usize> {
    (0..n)
        .map(|i| if i < 2 * c { i % c } else { rng.random_range(0..c) })
        .collect()
}

/// Direct evaluation of between / (within + eps) per coordinate.
pub fn naive_fisher(f: &Array2<f64>, train: &[usize], labels: &[usize], eps: f64) -> Vec<f64> {
    let classes: Vec<usize> = {
        let mut c = labels.to_vec();
        c.sort_unstable();
        c.dedup();
        c
    };
    (0..f.ncols())
        .map(|j| {
            let vals: Vec<f64> = train.iter().map(|&i| f[[i, j]]).collect();
            let mu = vals.iter().sum::<f64>() / vals.len() as f64;
            let mut between = 0.0;
            let mut within = 0.0;
            for &c in &classes {
                let members: Vec<f64> = vals
                    .iter()
                    .zip(labels)
                    .filter(|(_, &l)| l == c)
                    .map(|(v, _)| *v)
                    .collect();
                let mc = members.iter().sum::<f64>() / members.len() as f64;
                between += members.len() as f64 * (mc - mu).powi(2);
                within += members.iter().map(|v| (v - mc).powi(2)).sum::<f64>();
            }
            between / (within + eps)
        })
        .collect()
}

/// Squared distance from `v` to the affine span of the top `r` principal
/// directions of `rows`, via an eigendecomposition of the scatter matrix.
pub fn brute_pca_residual(rows: ArrayView2<'_, f64>, r: usize, v: ArrayView1<'_, f64>) -> f64 {
    let k = rows.ncols();
    let mu = rows.mean_axis(Axis(0)).unwrap();
    let centered = &rows - &mu;
    let m = DMatrix::from_fn(centered.nrows(), k, |i, j| centered[[i, j]]);
    let eig = SymmetricEigen::new(m.transpose() * &m);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let d = DMatrix::from_fn(k, 1, |j, _| v[j] - mu[j]);
    let mut proj = DMatrix::<f64>::zeros(k, 1);
    for &idx in order.iter().take(r) {
        let u = eig.eigenvectors.column(idx);
        proj += u * (u.transpose() * &d)[(0, 0)];
    }
    (d - proj).norm_squared()
}

/// Primal ridge scores `F_test (F^T F + alpha I)^{-1} F^T Y`.
pub fn primal_ridge_scores(
    f_train: &Array2<f64>,
    labels: &[usize],
    classes: &[usize],
    alpha: f64,
    f_test: &Array2<f64>,
) -> Array2<f64> {
    let (n, k) = f_train.dim();
    let f = DMatrix::from_fn(n, k, |i, j| f_train[[i, j]]);
    let y = DMatrix::from_fn(n, classes.len(), |i, c| if labels[i] == classes[c] { 1.0 } else { 0.0 });
    let a = f.transpose() * &f + DMatrix::identity(k, k) * alpha;
    let w = a.lu().solve(&(f.transpose() * y)).expect("primal system is regular");
    let t = DMatrix::from_fn(f_test.nrows(), k, |i, j| f_test[[i, j]]);
    let z = t * w;
    Array2::from_shape_fn((z.nrows(), z.ncols()), |(i, c)| z[(i, c)])
}

pub fn row_normalize(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        }
    }
    out
}

/// First index of the smallest value.
pub fn first_argmin(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v < row[best] {
            best = i;
        }
    }
    best
}

pub fn cosine_matrix(x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let norms: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    Array2::from_shape_fn((n, n), |(i, j)| {
        if norms[i] == 0.0 || norms[j] == 0.0 {
            f64::NAN
        } else {
            x.row(i).dot(&x.row(j)) / (norms[i] * norms[j])
        }
    })
}

/// Mutual kNN by full sort of each similarity row; zero rows pair with nothing.
pub fn brute_mutual_knn(x: &Array2<f64>, k: usize) -> Vec<(usize, usize)> {
    let s = cosine_matrix(x);
    let n = x.nrows();
    let lists: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            if s[[i, i]].is_nan() {
                return vec![];
            }
            let mut c: Vec<usize> = (0..n).filter(|&j| j != i && !s[[i, j]].is_nan()).collect();
            c.sort_by(|&a, &b| s[[i, b]].total_cmp(&s[[i, a]]).then(a.cmp(&b)));
            c.truncate(k);
            c
        })
        .collect();
    let mut out = vec![];
    for i in 0..n {
        for j in i + 1..n {
            if lists[i].contains(&j) && lists[j].contains(&i) {
                out.push((i, j));
            }
        }
    }
    out
}

/// A labeled graph with clustered features.
pub struct Instance {
    pub graph: SparseGraph,
    pub x: Array2<f64>,
    pub labels: Vec<usize>,
}

impl Instance {
    pub fn random(seed: u64, n: usize, d: usize, c: usize, p_edge: f64, signal: f64) -> Self {
        let mut r = rng(seed);
        let labels = random_labels(&mut r, n, c);
        let mut x = gaussian(&mut r, n, d);
        for (i, &y) in labels.iter().enumerate() {
            x[[i, y % d]] += signal;
        }
        let graph = SparseGraph::from_edges(n, &random_edges(&mut r, n, p_edge)).unwrap();
        Self { graph, x, labels }
    }

    pub fn optional_labels(&self) -> Vec<Option<usize>> {
        self.labels.iter().map(|&l| Some(l)).collect()
    }

    pub fn labeled(&self, nodes: &[usize]) -> LabeledNodes {
        LabeledNodes::new(nodes.to_vec(), nodes.iter().map(|&i| self.labels[i]).collect()).unwrap()
    }
}

/// Refits from scratch for every configuration and keeps the first best.
pub fn naive_grid_search(
    dict: &SignalDictionary,
    train: &LabeledNodes,
    val: &LabeledNodes,
    grids: &Grids,
    conv: Conventions,
) -> (HyperConfig, FittedScaffold) {
    let mut best: Option<(f64, HyperConfig, FittedScaffold)> = None;
    for cfg in grids.configs() {
        let sc = fit_dictionary(dict, train, &cfg, conv).unwrap();
        let pred = sc.predict_nodes(dict, &val.nodes).unwrap();
        let hits = pred.labels.iter().zip(&val.labels).filter(|(a, b)| a == b).count();
        let acc = hits as f64 / val.len() as f64;
        if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
            best = Some((acc, cfg, sc));
        }
    }
    let (_, c, s) = best.unwrap();
    (c, s)
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn column(v: &[f64]) -> Array1<f64> {
    Array1::from(v.to_vec())
}
