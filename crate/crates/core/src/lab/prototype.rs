//! Label-free graph constructions: mutual-kNN densification and
//! degree-preserving rewiring.

use std::collections::HashSet;

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn canon(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

fn canonical_edges(edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut out: Vec<_> = edges
        .iter()
        .filter(|(u, v)| u != v)
        .map(|&(u, v)| canon(u, v))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// The `k` most cosine-similar other nodes of every node. Ties go to the
/// lower index; all-zero rows have no neighbours.
pub fn knn_lists(x: ArrayView2<'_, f64>, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = x.nrows();
    if k == 0 || k >= n {
        return Err(Error::input(format!("k must be in [1, {}), got {k}", n)));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("features contain non-finite values"));
    }
    let norms: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    let lists = (0..n)
        .map(|i| {
            if norms[i] == 0.0 {
                return Vec::new();
            }
            let xi = x.row(i);
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i && norms[j] > 0.0)
                .map(|j| (xi.dot(&x.row(j)) / (norms[i] * norms[j]), j))
                .collect();
            cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            cand.truncate(k);
            let mut nb: Vec<usize> = cand.into_iter().map(|(_, j)| j).collect();
            nb.sort_unstable();
            nb
        })
        .collect();
    Ok(lists)
}

/// Base edges plus every mutual k-nearest-neighbour pair, canonical and sorted.
pub fn mutual_knn_densify(
    x: ArrayView2<'_, f64>,
    k: usize,
    base_edges: &[(usize, usize)],
) -> Result<Vec<(usize, usize)>> {
    let n = x.nrows();
    if let Some(&(u, v)) = base_edges.iter().find(|&&(u, v)| u >= n || v >= n) {
        return Err(Error::EdgeOutOfRange { u, v, n });
    }
    let lists = knn_lists(x, k)?;
    let mut edges = base_edges.to_vec();
    for (i, nb) in lists.iter().enumerate() {
        for &j in nb {
            if i < j && lists[j].binary_search(&i).is_ok() {
                edges.push((i, j));
            }
        }
    }
    Ok(canonical_edges(&edges))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewireMethod {
    DoubleEdgeSwap,
    UniformDropout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewireOutcome {
    pub edges: Vec<(usize, usize)>,
    pub method: RewireMethod,
    pub swaps_target: usize,
    pub swaps_done: usize,
    pub attempts: usize,
}

/// Double-edge swaps `(a,b),(c,d) -> (a,d),(c,b)` until `ceil(fraction*|E|)`
/// succeed. If the attempt budget of `100*|E|` runs out, falls back to
/// keeping a uniform `floor((1-dropout)*|E|)` subset of the original edges.
pub fn degree_preserving_rewire(
    edges: &[(usize, usize)],
    fraction: f64,
    seed: u64,
    dropout: f64,
) -> Result<RewireOutcome> {
    if !(0.0..=1.0).contains(&fraction) || !(0.0..=1.0).contains(&dropout) {
        return Err(Error::input("rewire fraction and dropout must lie in [0, 1]"));
    }
    let original = canonical_edges(edges);
    let m = original.len();
    if m == 0 {
        return Err(Error::input("cannot rewire an empty edge set"));
    }
    let target = (fraction * m as f64).ceil() as usize;
    let budget = 100 * m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut cur = original.clone();
    let mut present: HashSet<(usize, usize)> = cur.iter().copied().collect();
    let mut done = 0;
    let mut attempts = 0;
    while done < target && attempts < budget && m >= 2 {
        attempts += 1;
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        if i == j {
            continue;
        }
        let (a, b) = cur[i];
        let (c, d) = if rng.random::<bool>() {
            cur[j]
        } else {
            (cur[j].1, cur[j].0)
        };
        if a == d || c == b {
            continue;
        }
        let e1 = canon(a, d);
        let e2 = canon(c, b);
        if e1 == e2 || present.contains(&e1) || present.contains(&e2) {
            continue;
        }
        present.remove(&cur[i]);
        present.remove(&cur[j]);
        present.insert(e1);
        present.insert(e2);
        cur[i] = e1;
        cur[j] = e2;
        done += 1;
    }

    if done >= target {
        cur.sort_unstable();
        return Ok(RewireOutcome {
            edges: cur,
            method: RewireMethod::DoubleEdgeSwap,
            swaps_target: target,
            swaps_done: done,
            attempts,
        });
    }

    let keep = ((1.0 - dropout) * m as f64).floor() as usize;
    let mut idx: Vec<usize> = sample(&mut rng, m, keep).into_vec();
    idx.sort_unstable();
    Ok(RewireOutcome {
        edges: idx.into_iter().map(|i| original[i]).collect(),
        method: RewireMethod::UniformDropout,
        swaps_target: target,
        swaps_done: done,
        attempts,
    })
}
