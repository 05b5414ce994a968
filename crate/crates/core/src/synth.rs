//! Synthetic benchmarks: stochastic block model graphs with Gaussian
//! features whose class means are shifted apart.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Labels laid out contiguously by block size.
pub fn block_labels(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
        .collect()
}

/// Undirected SBM: each pair is linked with `p_in` inside a block and
/// `p_out` across blocks. Edges come back canonical (u < v) and sorted.
pub fn stochastic_block_model<R: Rng + ?Sized>(
    sizes: &[usize],
    p_in: f64,
    p_out: f64,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    for p in [p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::input(format!("edge probability {p} outside [0, 1]")));
        }
    }
    let labels = block_labels(sizes);
    let n = labels.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Ok(edges)
}

/// Standard normal features plus `shift` on the coordinates `j` with
/// `j % C == label`.
pub fn mean_shifted_gaussian<R: Rng + ?Sized>(labels: &[usize], dim: usize, shift: f64, rng: &mut R) -> Array2<f64> {
    let c = labels.iter().max().map_or(1, |m| m + 1);
    let mut x = Array2::zeros((labels.len(), dim));
    for (i, &y) in labels.iter().enumerate() {
        for j in 0..dim {
            let z: f64 = StandardNormal.sample(rng);
            x[[i, j]] = z + if j % c == y { shift } else { 0.0 };
        }
    }
    x
}
