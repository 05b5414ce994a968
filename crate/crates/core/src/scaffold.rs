//! Fitting and prediction for the fused subspace + ridge classifier.
//!
//! A fitted scaffold holds everything chosen on training data: the selected
//! dictionary coordinates, one PCA subspace per training class, the ridge
//! weights for every alpha, and the two branch normalizers. Prediction
//! standardizes both branch scores by those normalizers, mixes them with the
//! fusion weight `w` and takes the smallest fused score.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dictionary::{BlockId, BlockSet, SignalDictionary};
use crate::error::{Error, Result};
use crate::fisher::{self, FisherSelection};
use crate::graph::SparseGraph;
use crate::ridge::{fit_ridge, RidgeModel};
use crate::stats::{argmin, Conventions};
use crate::subspace::{fit_class_subspaces, pca_residuals, ClassSubspace};

/// Node indices paired with their labels. Fitting and selection only ever
/// receive these for training and validation nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledNodes {
    pub nodes: Vec<usize>,
    pub labels: Vec<usize>,
}

impl LabeledNodes {
    pub fn new(nodes: Vec<usize>, labels: Vec<usize>) -> Result<Self> {
        if nodes.len() != labels.len() {
            return Err(Error::Shape {
                expected: format!("{} labels", nodes.len()),
                got: format!("{}", labels.len()),
            });
        }
        Ok(Self { nodes, labels })
    }

    /// Looks up labels for `nodes`; every node must be labeled.
    pub fn gather(all: &[Option<usize>], nodes: &[usize]) -> Result<Self> {
        let labels = nodes
            .iter()
            .map(|&i| match all.get(i) {
                Some(Some(c)) => Ok(*c),
                Some(None) => Err(Error::input(format!("node {i} is unlabeled"))),
                None => Err(Error::input(format!("node {i} out of range"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            nodes: nodes.to_vec(),
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn concat(&self, other: &LabeledNodes) -> LabeledNodes {
        LabeledNodes {
            nodes: self.nodes.iter().chain(&other.nodes).copied().collect(),
            labels: self.labels.iter().chain(&other.labels).copied().collect(),
        }
    }
}

/// One point of the hyperparameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperConfig {
    /// Requested Fisher budget; clipped to the dictionary width.
    pub k: usize,
    pub r_max: usize,
    pub eta: f64,
    pub alphas: Vec<f64>,
    pub w: f64,
}

/// Which labeled rows feed the Fisher statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FisherRows {
    #[default]
    Train,
    TrainVal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedScaffold {
    pub config: HyperConfig,
    pub conventions: Conventions,
    pub active_blocks: BlockSet,
    pub dictionary_width: usize,
    pub selection: FisherSelection,
    /// Fisher score of each selected coordinate, aligned with `selection.selected`.
    pub selected_scores: Vec<f64>,
    pub selected_blocks: Vec<BlockId>,
    pub subspaces: Vec<ClassSubspace>,
    pub ridge: RidgeModel,
    /// Training-present classes, ascending; column order of every score matrix.
    pub classes: Vec<usize>,
    pub sigma_pca: f64,
    pub sigma_ridge: f64,
}

/// Builds the dictionary and fits with Fisher statistics from the training rows.
pub fn fit(
    g: &SparseGraph,
    x: ArrayView2<'_, f64>,
    train: &LabeledNodes,
    config: &HyperConfig,
    blocks: &BlockSet,
    conventions: Conventions,
) -> Result<FittedScaffold> {
    let dict = SignalDictionary::build(g, x, blocks)?;
    fit_dictionary(&dict, train, config, conventions)
}

pub fn fit_dictionary(
    dict: &SignalDictionary,
    train: &LabeledNodes,
    config: &HyperConfig,
    conventions: Conventions,
) -> Result<FittedScaffold> {
    let scores = fisher::fisher_scores(dict.features().view(), &train.nodes, &train.labels, conventions.epsilon)?;
    fit_with_scores(dict, scores.as_slice().unwrap(), train, config, conventions)
}

/// Fits with externally computed Fisher scores over the full dictionary.
pub fn fit_with_scores(
    dict: &SignalDictionary,
    scores: &[f64],
    train: &LabeledNodes,
    config: &HyperConfig,
    conventions: Conventions,
) -> Result<FittedScaffold> {
    if train.is_empty() {
        return Err(Error::input("empty training set"));
    }
    if scores.len() != dict.p() {
        return Err(Error::Shape {
            expected: format!("{} Fisher scores", dict.p()),
            got: format!("{}", scores.len()),
        });
    }
    if !(0.0..=1.0).contains(&config.w) {
        return Err(Error::input(format!("fusion weight {} outside [0, 1]", config.w)));
    }
    if config.k == 0 {
        return Err(Error::input("Fisher budget K must be at least 1"));
    }
    let selection = fisher::select_top_k(scores, config.k);
    let (f, selected_blocks) = fisher::restrict(dict.features().view(), dict.coord_block(), &selection.selected);
    let f_train = f.select(Axis(0), &train.nodes);

    let subspaces = fit_class_subspaces(f_train.view(), &train.labels, config.r_max, config.eta)?;
    let ridge = fit_ridge(f_train.view(), &train.labels, &config.alphas, conventions.std_mode)?;

    let r_pca = pca_residuals(f_train.view(), &subspaces)?;
    let r_ridge = ridge.scores(f_train.view(), conventions.epsilon)?;
    let sigma_pca = conventions.std_mode.std(r_pca.iter());
    let sigma_ridge = conventions.std_mode.std(r_ridge.iter());

    Ok(FittedScaffold {
        config: config.clone(),
        conventions,
        active_blocks: dict.active().clone(),
        dictionary_width: dict.p(),
        selected_scores: selection.selected.iter().map(|&j| scores[j]).collect(),
        selection,
        selected_blocks,
        classes: ridge.classes.clone(),
        subspaces,
        ridge,
        sigma_pca,
        sigma_ridge,
    })
}

/// Standardized branch scores for a set of rows, columns in class order.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchScores {
    pub pca: Array2<f64>,
    pub ridge: Array2<f64>,
}

impl BranchScores {
    pub fn fuse(&self, w: f64) -> Array2<f64> {
        fuse(self.pca.view(), self.ridge.view(), w)
    }

    /// Column index of the fused argmin per row.
    pub fn decide(&self, w: f64) -> Vec<usize> {
        argmin_rows(self.fuse(w).view())
    }
}

pub(crate) fn fuse(pca: ArrayView2<'_, f64>, ridge: ArrayView2<'_, f64>, w: f64) -> Array2<f64> {
    let mut out = Array2::zeros(pca.raw_dim());
    ndarray::Zip::from(&mut out)
        .and(&pca)
        .and(&ridge)
        .for_each(|s, &p, &r| *s = w * p + (1.0 - w) * r);
    out
}

pub(crate) fn argmin_rows(m: ArrayView2<'_, f64>) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|r| argmin(r.iter().copied()).unwrap_or(0))
        .collect()
}

pub(crate) fn standardize(mut m: Array2<f64>, sigma: f64, epsilon: f64) -> Array2<f64> {
    let denom = sigma + epsilon;
    m.mapv_inplace(|v| v / denom);
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Predicted class ids.
    pub labels: Vec<usize>,
    pub fused: Array2<f64>,
    pub branches: BranchScores,
}

impl FittedScaffold {
    /// Gathers the selected coordinates of the given nodes.
    pub fn select_rows(&self, dict: &SignalDictionary, nodes: &[usize]) -> Result<Array2<f64>> {
        if dict.p() != self.dictionary_width {
            return Err(Error::Shape {
                expected: format!("dictionary width {}", self.dictionary_width),
                got: format!("{}", dict.p()),
            });
        }
        if let Some(&i) = nodes.iter().find(|&&i| i >= dict.n()) {
            return Err(Error::input(format!("node {i} out of range")));
        }
        Ok(dict
            .features()
            .select(Axis(0), nodes)
            .select(Axis(1), &self.selection.selected))
    }

    pub fn branch_scores(&self, f: ArrayView2<'_, f64>) -> Result<BranchScores> {
        let eps = self.conventions.epsilon;
        let pca = standardize(pca_residuals(f, &self.subspaces)?, self.sigma_pca, eps);
        let ridge = standardize(self.ridge.scores(f, eps)?, self.sigma_ridge, eps);
        Ok(BranchScores { pca, ridge })
    }

    /// Predicts rows already restricted to the selected coordinates.
    pub fn predict(&self, f: ArrayView2<'_, f64>) -> Result<Prediction> {
        self.predict_with_weight(f, self.config.w)
    }

    pub fn predict_with_weight(&self, f: ArrayView2<'_, f64>, w: f64) -> Result<Prediction> {
        let branches = self.branch_scores(f)?;
        let fused = branches.fuse(w);
        let labels = argmin_rows(fused.view()).into_iter().map(|c| self.classes[c]).collect();
        Ok(Prediction {
            labels,
            fused,
            branches,
        })
    }

    pub fn predict_nodes(&self, dict: &SignalDictionary, nodes: &[usize]) -> Result<Prediction> {
        let f = self.select_rows(dict, nodes)?;
        self.predict(f.view())
    }

    pub fn class_column(&self, class: usize) -> Option<usize> {
        self.classes.binary_search(&class).ok()
    }
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}
