//! Validation-accuracy grid search and the repeated-split evaluation protocol.
//!
//! The grid is scanned in lexicographic `(K, r_max, eta, alpha_set, w)` order
//! and the first configuration with the highest validation accuracy wins.
//! Work is shared across the scan: Fisher scores are computed once, each
//! distinct clipped budget gets one restriction, one set of class
//! decompositions and one ridge solve per distinct alpha; the `(r_max, eta)`
//! and `alpha_set` levels only reslice those, and the `w` sweep only refuses.

use std::collections::BTreeMap;

use ndarray::{s, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionary::{BlockSet, SignalDictionary};
use crate::error::{Error, Result};
use crate::fisher;
use crate::graph::SparseGraph;
use crate::ridge::{combine_alpha_scores, AlphaFit, RidgeProblem};
use crate::scaffold::{
    accuracy, argmin_rows, fit_with_scores, fuse, standardize, FisherRows, FittedScaffold, HyperConfig, LabeledNodes,
    Prediction,
};
use crate::split::{make_split, Split, SplitSpec};
use crate::stats::{mean, sample_std, Conventions};
use crate::subspace::{check_hyper, decompose_classes, ClassDecomposition, ProjectedClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub k: Vec<usize>,
    pub r_max: Vec<usize>,
    pub eta: Vec<f64>,
    pub alpha_sets: Vec<Vec<f64>>,
    pub w: Vec<f64>,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            k: vec![4000, 5000, 6000, 8000],
            r_max: vec![32, 48, 64, 96],
            eta: vec![0.90, 0.95, 0.99],
            alpha_sets: vec![vec![0.01, 0.1, 1.0], vec![0.05, 0.5, 5.0], vec![0.1, 1.0, 10.0]],
            w: vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
        }
    }
}

impl Grids {
    pub fn len(&self) -> usize {
        self.k.len() * self.r_max.len() * self.eta.len() * self.alpha_sets.len() * self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn single(config: &HyperConfig) -> Self {
        Self {
            k: vec![config.k],
            r_max: vec![config.r_max],
            eta: vec![config.eta],
            alpha_sets: vec![config.alphas.clone()],
            w: vec![config.w],
        }
    }

    /// Every configuration in scan order.
    pub fn configs(&self) -> Vec<HyperConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &k in &self.k {
            for &r_max in &self.r_max {
                for &eta in &self.eta {
                    for alphas in &self.alpha_sets {
                        for &w in &self.w {
                            out.push(HyperConfig {
                                k,
                                r_max,
                                eta,
                                alphas: alphas.clone(),
                                w,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::input("hyperparameter grid is empty"));
        }
        if self.k.contains(&0) {
            return Err(Error::input("Fisher budget K must be at least 1"));
        }
        for &r in &self.r_max {
            for &e in &self.eta {
                check_hyper(r, e)?;
            }
        }
        for set in &self.alpha_sets {
            if set.is_empty() || set.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
                return Err(Error::input(format!("invalid alpha set {set:?}")));
            }
        }
        if self.w.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::input("fusion weights must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub config: HyperConfig,
    pub val_accuracy: f64,
    pub configs_evaluated: usize,
    pub scaffold: FittedScaffold,
}

/// Everything that depends only on the clipped budget.
struct BudgetLevel {
    decomps: Vec<ClassDecomposition>,
    projections: Vec<ProjectedClass>,
    alpha_fits: Vec<(f64, AlphaFit, Array2<f64>)>,
    n_classes: usize,
}

impl BudgetLevel {
    fn scores_for(&self, alpha: f64) -> (&AlphaFit, &Array2<f64>) {
        let (_, fit, z) = self
            .alpha_fits
            .iter()
            .find(|(a, _, _)| a.to_bits() == alpha.to_bits())
            .expect("alpha solved for this budget");
        (fit, z)
    }
}

fn fisher_scores_for(
    dict: &SignalDictionary,
    train: &LabeledNodes,
    val: &LabeledNodes,
    rows: FisherRows,
    epsilon: f64,
) -> Result<Vec<f64>> {
    let q = match rows {
        FisherRows::Train => fisher::fisher_scores(dict.features().view(), &train.nodes, &train.labels, epsilon)?,
        FisherRows::TrainVal => {
            let both = train.concat(val);
            fisher::fisher_scores(dict.features().view(), &both.nodes, &both.labels, epsilon)?
        }
    };
    Ok(q.to_vec())
}

/// Cached lexicographic grid search. Returns the winning configuration,
/// refit as a scaffold on the training nodes.
pub fn grid_search(
    dict: &SignalDictionary,
    train: &LabeledNodes,
    val: &LabeledNodes,
    grids: &Grids,
    conventions: Conventions,
    fisher_rows: FisherRows,
) -> Result<SearchOutcome> {
    grids.validate()?;
    if train.is_empty() {
        return Err(Error::input("empty training set"));
    }
    if val.is_empty() {
        return Err(Error::input("empty validation set"));
    }
    let eps = conventions.epsilon;
    let scores = fisher_scores_for(dict, train, val, fisher_rows, eps)?;
    let ranking = fisher::rank_coordinates(&scores);
    let n_tr = train.len();
    let eval_nodes: Vec<usize> = train.nodes.iter().chain(&val.nodes).copied().collect();
    let max_rank = *grids.r_max.iter().max().unwrap();

    let mut alphas: Vec<f64> = grids.alpha_sets.iter().flatten().copied().collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup_by(|a, b| a.to_bits() == b.to_bits());

    let mut budgets: Vec<usize> = grids.k.iter().map(|&k| k.min(dict.p())).collect();
    budgets.sort_unstable();
    budgets.dedup();

    // Validation accuracy table per distinct budget, in (r_max, eta, alpha_set, w) order.
    let tables: BTreeMap<usize, Vec<f64>> = budgets
        .par_iter()
        .map(|&k_eff| {
            let mut selected = ranking[..k_eff].to_vec();
            selected.sort_unstable();
            let f_eval = dict.features().select(Axis(0), &eval_nodes).select(Axis(1), &selected);
            let level = build_level(f_eval.view(), n_tr, train, &alphas, max_rank, conventions)?;
            Ok((k_eff, sweep_level(&level, n_tr, val, grids, conventions)))
        })
        .collect::<Result<_>>()?;

    let inner = grids.r_max.len() * grids.eta.len() * grids.alpha_sets.len() * grids.w.len();
    let mut best: Option<(usize, f64)> = None;
    for (ki, &k) in grids.k.iter().enumerate() {
        let table = &tables[&k.min(dict.p())];
        for (j, &acc) in table.iter().enumerate() {
            if best.is_none_or(|(_, b)| acc > b) {
                best = Some((ki * inner + j, acc));
            }
        }
    }
    let (best_idx, val_accuracy) = best.expect("grid is non-empty");
    let config = grids.configs().swap_remove(best_idx);
    let scaffold = fit_with_scores(dict, &scores, train, &config, conventions)?;
    Ok(SearchOutcome {
        config,
        val_accuracy,
        configs_evaluated: grids.len(),
        scaffold,
    })
}

fn build_level(
    f_eval: ArrayView2<'_, f64>,
    n_tr: usize,
    train: &LabeledNodes,
    alphas: &[f64],
    max_rank: usize,
    conventions: Conventions,
) -> Result<BudgetLevel> {
    let f_train = f_eval.slice(s![..n_tr, ..]);
    let decomps = decompose_classes(f_train, &train.labels)?;
    let projections = decomps
        .par_iter()
        .map(|d| ProjectedClass::new(f_eval, d, max_rank))
        .collect();
    let problem = RidgeProblem::new(f_train, &train.labels)?;
    let alpha_fits = alphas
        .par_iter()
        .map(|&a| {
            let fit = problem.solve(a, conventions.std_mode)?;
            let z = fit.scores(f_eval);
            Ok((a, fit, z))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BudgetLevel {
        n_classes: decomps.len(),
        decomps,
        projections,
        alpha_fits,
    })
}

fn sweep_level(
    level: &BudgetLevel,
    n_tr: usize,
    val: &LabeledNodes,
    grids: &Grids,
    conventions: Conventions,
) -> Vec<f64> {
    let eps = conventions.epsilon;
    let n_eval = n_tr + val.len();
    let classes: Vec<usize> = level.decomps.iter().map(|d| d.class).collect();
    let mut out = Vec::with_capacity(grids.len() / grids.k.len());
    for &r_max in &grids.r_max {
        for &eta in &grids.eta {
            let ranks: Vec<usize> = level.decomps.iter().map(|d| d.select_rank(r_max, eta).0).collect();
            let mut r_pca = Array2::zeros((n_eval, level.n_classes));
            for (c, proj) in level.projections.iter().enumerate() {
                debug_assert!(ranks[c] <= proj.max_rank());
                for i in 0..n_eval {
                    r_pca[[i, c]] = proj.residual(i, ranks[c]);
                }
            }
            let sigma_pca = conventions.std_mode.std(r_pca.slice(s![..n_tr, ..]).to_owned().iter());
            let pca_std = standardize(r_pca, sigma_pca, eps);

            for set in &grids.alpha_sets {
                let parts: Vec<_> = set.iter().map(|&a| level.scores_for(a)).collect();
                let r_ridge = combine_alpha_scores(
                    parts.iter().map(|(fit, z)| (z.view(), fit.sigma)),
                    n_eval,
                    level.n_classes,
                    eps,
                );
                let sigma_ridge = conventions
                    .std_mode
                    .std(r_ridge.slice(s![..n_tr, ..]).to_owned().iter());
                let ridge_std = standardize(r_ridge, sigma_ridge, eps);
                let pca_val = pca_std.slice(s![n_tr.., ..]);
                let ridge_val = ridge_std.slice(s![n_tr.., ..]);
                for &w in &grids.w {
                    let pred: Vec<usize> = argmin_rows(fuse(pca_val, ridge_val, w).view())
                        .into_iter()
                        .map(|c| classes[c])
                        .collect();
                    out.push(accuracy(&pred, &val.labels));
                }
            }
        }
    }
    out
}

/// One repeat of the evaluation protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatOutcome {
    pub repeat: usize,
    pub seed: u64,
    pub split: Split,
    pub search: SearchOutcome,
    pub test_accuracy: f64,
    pub test_prediction: Prediction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub repeats: Vec<RepeatOutcome>,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; `None` for a single repeat.
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub split: SplitSpec,
    pub repeats: usize,
    pub grids: Grids,
    pub blocks: BlockSet,
    pub conventions: Conventions,
    pub fisher_rows: FisherRows,
}

/// Runs one split: select on train/val, then score the untouched test nodes.
pub fn evaluate_split(
    dict: &SignalDictionary,
    labels: &[Option<usize>],
    split: &Split,
    grids: &Grids,
    conventions: Conventions,
    fisher_rows: FisherRows,
) -> Result<(SearchOutcome, Prediction, f64)> {
    let train = LabeledNodes::gather(labels, &split.train)?;
    let val = LabeledNodes::gather(labels, &split.val)?;
    let search = grid_search(dict, &train, &val, grids, conventions, fisher_rows)?;
    let prediction = search.scaffold.predict_nodes(dict, &split.test)?;
    let test = LabeledNodes::gather(labels, &split.test)?;
    let acc = accuracy(&prediction.labels, &test.labels);
    Ok((search, prediction, acc))
}

/// Repeated class-balanced splits with seeds `base + repeat`; reports the
/// per-repeat test accuracies, their mean and sample standard deviation.
pub fn evaluate_repeats(
    g: &SparseGraph,
    x: ArrayView2<'_, f64>,
    labels: &[Option<usize>],
    opts: &EvalOptions,
) -> Result<Evaluation> {
    if labels.len() != g.n() {
        return Err(Error::Shape {
            expected: format!("{} labels", g.n()),
            got: format!("{}", labels.len()),
        });
    }
    let dict = SignalDictionary::build(g, x, &opts.blocks)?;
    let mut repeats = Vec::with_capacity(opts.repeats);
    for r in 0..opts.repeats {
        let spec = opts.split.with_repeat(r);
        let split = make_split(labels, &spec)?;
        let (search, test_prediction, test_accuracy) =
            evaluate_split(&dict, labels, &split, &opts.grids, opts.conventions, opts.fisher_rows)?;
        repeats.push(RepeatOutcome {
            repeat: r,
            seed: spec.effective_seed(),
            split,
            search,
            test_accuracy,
            test_prediction,
        });
    }
    let accuracies: Vec<f64> = repeats.iter().map(|r| r.test_accuracy).collect();
    Ok(Evaluation {
        mean: mean(&accuracies).unwrap_or(0.0),
        std: sample_std(&accuracies),
        accuracies,
        repeats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::split::SplitMode;
    use ndarray::array;

    #[test]
    fn default_grid_has_1008_points() {
        let g = Grids::default();
        assert_eq!(g.len(), 1008);
        let c = g.configs();
        assert_eq!(c[0].k, 4000);
        assert_eq!(c[0].w, 0.2);
        assert_eq!(c[1].w, 0.3);
        assert_eq!(c[7].alphas, vec![0.05, 0.5, 5.0]);
        assert_eq!(c[1007].k, 8000);
    }

    fn two_blob() -> (SparseGraph, Array2<f64>, Vec<Option<usize>>) {
        let g = SparseGraph::from_edges(8, &[]).unwrap();
        let x = array![
            [1.0, 0.1, 0.0],
            [0.9, 0.0, 0.1],
            [1.0, 0.2, 0.1],
            [0.8, 0.1, 0.0],
            [0.0, 0.1, 1.0],
            [0.1, 0.0, 0.9],
            [0.0, 0.2, 1.1],
            [0.2, 0.1, 0.8]
        ];
        let labels = vec![Some(0), Some(0), Some(0), Some(0), Some(1), Some(1), Some(1), Some(1)];
        (g, x, labels)
    }

    #[test]
    fn single_config_grid_returns_it() {
        let (g, x, labels) = two_blob();
        let dict = SignalDictionary::build(&g, x.view(), &BlockSet::all()).unwrap();
        let cfg = HyperConfig {
            k: 5,
            r_max: 2,
            eta: 0.9,
            alphas: vec![1.0],
            w: 0.4,
        };
        let train = LabeledNodes::gather(&labels, &[0, 1, 4, 5]).unwrap();
        let val = LabeledNodes::gather(&labels, &[2, 6]).unwrap();
        let out = grid_search(
            &dict,
            &train,
            &val,
            &Grids::single(&cfg),
            Conventions::default(),
            FisherRows::Train,
        )
        .unwrap();
        assert_eq!(out.config, cfg);
        assert_eq!(out.val_accuracy, 1.0);
    }

    #[test]
    fn ties_go_to_the_earlier_config() {
        let (g, x, labels) = two_blob();
        let dict = SignalDictionary::build(&g, x.view(), &BlockSet::all()).unwrap();
        let train = LabeledNodes::gather(&labels, &[0, 1, 4, 5]).unwrap();
        let val = LabeledNodes::gather(&labels, &[2, 6]).unwrap();
        let grids = Grids {
            k: vec![10, 20],
            r_max: vec![1],
            eta: vec![0.9],
            alpha_sets: vec![vec![1.0]],
            w: vec![0.3, 0.7],
        };
        let out = grid_search(&dict, &train, &val, &grids, Conventions::default(), FisherRows::Train).unwrap();
        assert_eq!(out.val_accuracy, 1.0);
        assert_eq!((out.config.k, out.config.w), (10, 0.3));
    }

    #[test]
    fn perfectly_separable_repeats() {
        let (g, x, labels) = two_blob();
        let opts = EvalOptions {
            split: SplitSpec {
                mode: SplitMode::PerClass {
                    train_per_class: 2,
                    val_per_class: 1,
                },
                seed: 5,
                repeat: 0,
            },
            repeats: 3,
            grids: Grids {
                k: vec![27],
                r_max: vec![1, 2],
                eta: vec![0.9],
                alpha_sets: vec![vec![0.1, 1.0]],
                w: vec![0.5],
            },
            blocks: BlockSet::all(),
            conventions: Conventions::default(),
            fisher_rows: FisherRows::Train,
        };
        let ev = evaluate_repeats(&g, x.view(), &labels, &opts).unwrap();
        assert_eq!(ev.accuracies, vec![1.0; 3]);
        assert_eq!(ev.mean, 1.0);
        assert_eq!(ev.std, Some(0.0));
        assert_eq!(ev.repeats[2].seed, 7);
    }

    #[test]
    fn empty_validation_is_rejected() {
        let (g, x, labels) = two_blob();
        let dict = SignalDictionary::build(&g, x.view(), &BlockSet::all()).unwrap();
        let train = LabeledNodes::gather(&labels, &[0, 4]).unwrap();
        let val = LabeledNodes::gather(&labels, &[]).unwrap();
        assert!(grid_search(
            &dict,
            &train,
            &val,
            &Grids::default(),
            Conventions::default(),
            FisherRows::Train
        )
        .is_err());
    }
}
