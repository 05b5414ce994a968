//! Undirected sparse graphs and the two normalized propagation operators.
//!
//! Adjacency is held in compressed sparse row form. Isolated nodes get an
//! inverse degree of zero, so their rows (and for the symmetric operator,
//! their columns) are identically zero.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected, unweighted, loop-free graph in CSR layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseGraph {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    /// Canonical undirected edges, `u < v`, sorted.
    edges: Vec<(usize, usize)>,
}

impl SparseGraph {
    /// Builds a graph from an arbitrary edge list. Duplicates, reversed
    /// duplicates and self-loops are dropped.
    pub fn from_edges(n: usize, edge_list: &[(usize, usize)]) -> Result<Self> {
        let mut edges = Vec::with_capacity(edge_list.len());
        for &(u, v) in edge_list {
            if u >= n || v >= n {
                return Err(Error::EdgeOutOfRange { u, v, n });
            }
            if u != v {
                edges.push((u.min(v), u.max(v)));
            }
        }
        edges.sort_unstable();
        edges.dedup();

        let mut degree = vec![0usize; n];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0);
        for d in &degree {
            indptr.push(indptr.last().unwrap() + d);
        }
        let mut fill = indptr[..n].to_vec();
        let mut indices = vec![0usize; indptr[n]];
        for &(u, v) in &edges {
            indices[fill[u]] = v;
            fill[u] += 1;
            indices[fill[v]] = u;
            fill[v] += 1;
        }
        for i in 0..n {
            indices[indptr[i]..indptr[i + 1]].sort_unstable();
        }
        Ok(Self {
            n,
            indptr,
            indices,
            edges,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical `(u, v)` pairs with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn row_operator(&self) -> PropagationOperator {
        let values = (0..self.n)
            .flat_map(|i| {
                let d = self.degree(i);
                std::iter::repeat_n(1.0 / d as f64, d)
            })
            .collect();
        PropagationOperator {
            kind: OperatorKind::Row,
            n: self.n,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values,
        }
    }

    pub fn sym_operator(&self) -> PropagationOperator {
        let mut values = Vec::with_capacity(self.indices.len());
        for i in 0..self.n {
            let di = self.degree(i);
            for &j in self.neighbors(i) {
                values.push(1.0 / ((di * self.degree(j)) as f64).sqrt());
            }
        }
        PropagationOperator {
            kind: OperatorKind::Sym,
            n: self.n,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    /// `D^-1 A`
    Row,
    /// `D^-1/2 A D^-1/2`
    Sym,
}

/// Sparse n x n normalized adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationOperator {
    kind: OperatorKind,
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl PropagationOperator {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Iterates the stored `(col, value)` entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.indptr[i]..self.indptr[i + 1];
        match self.indices[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// Dense copy; only meant for tests and small diagnostics.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[[i, j]] = v;
            }
        }
        out
    }

    /// Sparse-dense product `P X`.
    pub fn propagate(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.n {
            return Err(Error::Shape {
                expected: format!("{} rows", self.n),
                got: format!("{} rows", x.nrows()),
            });
        }
        let mut out = Array2::zeros(x.raw_dim());
        for (i, mut out_row) in out.rows_mut().into_iter().enumerate() {
            for (j, w) in self.row(i) {
                out_row.scaled_add(w, &x.row(j));
            }
        }
        Ok(out)
    }
}
