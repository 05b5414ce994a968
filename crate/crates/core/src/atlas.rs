//! Node-level signal atlas and dataset fingerprints.
//!
//! Each evaluated node gets a Fisher-weighted evidence value per dictionary
//! block, normalized into block shares and into family shares (raw, low-pass,
//! high-pass) that average within a family first so the unequal block counts
//! do not bias the composition. Alongside sit the branch-wise predictions,
//! true-versus-nearest-wrong margins and the PCA/ridge decision quadrant.
//!
//! The fingerprint aggregates those records. Its decision fractions and
//! high-pass error shift depend on evaluation labels and are meant for
//! retrospective diagnosis only.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dictionary::{BlockId, Family, SignalDictionary};
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::report::{fmt_f64, fmt_opt, write_csv, write_json, ReportMeta};
use crate::scaffold::{argmin_rows, FittedScaffold, LabeledNodes};
use crate::subspace::ClassSubspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quadrant {
    BothCorrect,
    PcaOnly,
    RidgeOnly,
    BothWrong,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [
        Quadrant::BothCorrect,
        Quadrant::PcaOnly,
        Quadrant::RidgeOnly,
        Quadrant::BothWrong,
    ];

    pub fn from_branches(pca_correct: bool, ridge_correct: bool) -> Self {
        match (pca_correct, ridge_correct) {
            (true, true) => Quadrant::BothCorrect,
            (true, false) => Quadrant::PcaOnly,
            (false, true) => Quadrant::RidgeOnly,
            (false, false) => Quadrant::BothWrong,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Quadrant::BothCorrect => "both-correct",
            Quadrant::PcaOnly => "pca-only",
            Quadrant::RidgeOnly => "ridge-only",
            Quadrant::BothWrong => "both-wrong",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeAtlasRecord {
    pub node: usize,
    /// Block evidence in canonical block order; inactive blocks are 0.
    pub evidence: [f64; 9],
    pub block_shares: [f64; 9],
    pub r_raw: f64,
    pub r_low: f64,
    pub r_high: f64,
    /// No positive evidence in any block; all shares are 0.
    pub zero_evidence: bool,
    pub pred_pca: usize,
    pub pred_ridge: usize,
    pub pred: usize,
    /// Missing when the true class was absent from training.
    pub margin_pca: Option<f64>,
    pub margin_ridge: Option<f64>,
    pub label: usize,
    pub correct: bool,
    pub degree: usize,
    pub quadrant: Quadrant,
}

/// Family-size-adjusted shares from per-block `(family, evidence)` pairs:
/// average within each family over the blocks present, then normalize
/// across families.
pub fn family_shares(blocks: &[(Family, f64)], epsilon: f64) -> [f64; 3] {
    let mut sums = [0.0; 3];
    let mut counts = [0usize; 3];
    for &(g, e) in blocks {
        let k = g as usize;
        sums[k] += e;
        counts[k] += 1;
    }
    let means: [f64; 3] = std::array::from_fn(|k| {
        if counts[k] == 0 {
            0.0
        } else {
            sums[k] / counts[k] as f64
        }
    });
    let total: f64 = means.iter().sum();
    means.map(|m| m / (total + epsilon))
}

/// Per-block mean of `|F0_ij| * q_j` over the selected coordinates of node `i`.
fn block_evidence(dict: &SignalDictionary, scaffold: &FittedScaffold, node: usize) -> [f64; 9] {
    let row = dict.features().row(node);
    let mut sums = [0.0; 9];
    let mut counts = [0usize; 9];
    for ((&j, &q), &b) in scaffold
        .selection
        .selected
        .iter()
        .zip(&scaffold.selected_scores)
        .zip(&scaffold.selected_blocks)
    {
        sums[b.index()] += row[j].abs() * q;
        counts[b.index()] += 1;
    }
    std::array::from_fn(|b| {
        if counts[b] == 0 {
            0.0
        } else {
            sums[b] / counts[b] as f64
        }
    })
}

fn margin(scores: ndarray::ArrayView1<'_, f64>, true_col: Option<usize>) -> Option<f64> {
    let t = true_col?;
    let nearest_wrong = scores
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != t)
        .map(|(_, &v)| v)
        .min_by(f64::total_cmp)?;
    Some(nearest_wrong - scores[t])
}

/// Builds one atlas record per evaluation node. `dict` must be the
/// dictionary the scaffold was fitted on.
pub fn node_atlas(
    scaffold: &FittedScaffold,
    dict: &SignalDictionary,
    graph: &SparseGraph,
    eval: &LabeledNodes,
) -> Result<Vec<NodeAtlasRecord>> {
    if graph.n() != dict.n() {
        return Err(Error::Shape {
            expected: format!("graph with {} nodes", dict.n()),
            got: format!("{}", graph.n()),
        });
    }
    let eps = scaffold.conventions.epsilon;
    let f = scaffold.select_rows(dict, &eval.nodes)?;
    let branches = scaffold.branch_scores(f.view())?;
    let fused = branches.fuse(scaffold.config.w);
    let pred_fused = argmin_rows(fused.view());
    let pred_pca = argmin_rows(branches.pca.view());
    let pred_ridge = argmin_rows(branches.ridge.view());
    let active = dict.active();

    let mut out = Vec::with_capacity(eval.len());
    for (k, (&node, &label)) in eval.nodes.iter().zip(&eval.labels).enumerate() {
        let evidence = block_evidence(dict, scaffold, node);
        let total: f64 = evidence.iter().sum();
        let zero_evidence = total <= 0.0;
        let block_shares = if zero_evidence {
            [0.0; 9]
        } else {
            evidence.map(|e| e / (total + eps))
        };
        let fam_input: Vec<(Family, f64)> = active
            .blocks()
            .iter()
            .map(|&b| (b.family(), evidence[b.index()]))
            .collect();
        let [r_raw, r_low, r_high] = if zero_evidence {
            [0.0; 3]
        } else {
            family_shares(&fam_input, eps)
        };

        let true_col = scaffold.class_column(label);
        let pca_row = branches.pca.row(k);
        let ridge_row = branches.ridge.row(k);
        let p_pca = scaffold.classes[pred_pca[k]];
        let p_ridge = scaffold.classes[pred_ridge[k]];
        let pred = scaffold.classes[pred_fused[k]];
        out.push(NodeAtlasRecord {
            node,
            evidence,
            block_shares,
            r_raw,
            r_low,
            r_high,
            zero_evidence,
            pred_pca: p_pca,
            pred_ridge: p_ridge,
            pred,
            margin_pca: margin(pca_row, true_col),
            margin_ridge: margin(ridge_row, true_col),
            label,
            correct: pred == label,
            degree: graph.degree(node),
            quadrant: Quadrant::from_branches(p_pca == label, p_ridge == label),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantFractions {
    pub both_correct: f64,
    pub pca_only: f64,
    pub ridge_only: f64,
    pub both_wrong: f64,
}

impl QuadrantFractions {
    pub fn sum(&self) -> f64 {
        self.both_correct + self.pca_only + self.ridge_only + self.both_wrong
    }
}

/// Dataset-level aggregate of an atlas, all fractions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub r_d: f64,
    pub l_d: f64,
    pub h_d: f64,
    pub c_d: f64,
    pub q_ridge: f64,
    pub q_hard: f64,
    pub h_correct: Option<f64>,
    pub h_wrong: Option<f64>,
    pub delta_h: Option<f64>,
    pub quadrants: QuadrantFractions,
    pub n_eval: usize,
    pub n_zero_evidence: usize,
    /// Mean block share per block, canonical order.
    pub per_block_means: [f64; 9],
}

impl DatasetFingerprint {
    /// The seven-component summary `[R, L, H, C, Q_ridge, Q_hard, dH]`.
    pub fn vector(&self) -> [Option<f64>; 7] {
        [
            Some(self.r_d),
            Some(self.l_d),
            Some(self.h_d),
            Some(self.c_d),
            Some(self.q_ridge),
            Some(self.q_hard),
            self.delta_h,
        ]
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for v in values {
        s += v;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

pub fn fingerprint(atlas: &[NodeAtlasRecord], subspaces: &[ClassSubspace]) -> Result<DatasetFingerprint> {
    if atlas.is_empty() {
        return Err(Error::input("atlas is empty"));
    }
    let n = atlas.len() as f64;
    let frac = |pred: &dyn Fn(&NodeAtlasRecord) -> bool| atlas.iter().filter(|r| pred(r)).count() as f64 / n;
    let q = |quad: Quadrant| frac(&|r: &NodeAtlasRecord| r.quadrant == quad);
    let quadrants = QuadrantFractions {
        both_correct: q(Quadrant::BothCorrect),
        pca_only: q(Quadrant::PcaOnly),
        ridge_only: q(Quadrant::RidgeOnly),
        both_wrong: q(Quadrant::BothWrong),
    };
    let h_correct = mean_of(atlas.iter().filter(|r| r.correct).map(|r| r.r_high));
    let h_wrong = mean_of(atlas.iter().filter(|r| !r.correct).map(|r| r.r_high));
    let delta_h = match (h_wrong, h_correct) {
        (Some(w), Some(c)) => Some(w - c),
        _ => None,
    };
    Ok(DatasetFingerprint {
        r_d: mean_of(atlas.iter().map(|r| r.r_raw)).unwrap(),
        l_d: mean_of(atlas.iter().map(|r| r.r_low)).unwrap(),
        h_d: mean_of(atlas.iter().map(|r| r.r_high)).unwrap(),
        c_d: mean_of(subspaces.iter().map(|s| s.rank as f64)).unwrap_or(0.0),
        q_ridge: quadrants.ridge_only,
        q_hard: quadrants.both_wrong,
        h_correct,
        h_wrong,
        delta_h,
        quadrants,
        n_eval: atlas.len(),
        n_zero_evidence: atlas.iter().filter(|r| r.zero_evidence).count(),
        per_block_means: std::array::from_fn(|b| mean_of(atlas.iter().map(|r| r.block_shares[b])).unwrap()),
    })
}

/// Normalized projection-trace overlap `tr(Ba^T Bb Bb^T Ba) / min(ra, rb)`;
/// `None` when either subspace is zero-dimensional.
pub fn subspace_overlap(a: &ClassSubspace, b: &ClassSubspace) -> Option<f64> {
    let m = a.rank.min(b.rank);
    if m == 0 {
        return None;
    }
    let cross = a.basis_rows.dot(&b.basis_rows.t());
    Some(cross.iter().map(|v| v * v).sum::<f64>() / m as f64)
}

/// Percent-scaled JSON view of a fingerprint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FingerprintReport {
    #[serde(rename = "R_D")]
    pub r_d: f64,
    #[serde(rename = "L_D")]
    pub l_d: f64,
    #[serde(rename = "H_D")]
    pub h_d: f64,
    #[serde(rename = "C_D")]
    pub c_d: f64,
    #[serde(rename = "Q_ridge")]
    pub q_ridge: f64,
    #[serde(rename = "Q_hard")]
    pub q_hard: f64,
    #[serde(rename = "delta_H")]
    pub delta_h: Option<f64>,
    #[serde(rename = "H_correct")]
    pub h_correct: Option<f64>,
    #[serde(rename = "H_wrong")]
    pub h_wrong: Option<f64>,
    pub quadrants: QuadrantFractions,
    pub n_eval: usize,
    pub n_zero_evidence: usize,
    pub per_block_means: std::collections::BTreeMap<String, f64>,
    pub units: String,
    pub conventions: ReportConventions,
    pub config_hash: String,
    pub code_version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportConventions {
    pub std_mode: crate::stats::StdMode,
    pub epsilon: f64,
    pub split_mode: String,
}

impl FingerprintReport {
    pub fn new(fp: &DatasetFingerprint, meta: &ReportMeta) -> Self {
        let pct = |v: f64| 100.0 * v;
        Self {
            r_d: pct(fp.r_d),
            l_d: pct(fp.l_d),
            h_d: pct(fp.h_d),
            c_d: fp.c_d,
            q_ridge: pct(fp.q_ridge),
            q_hard: pct(fp.q_hard),
            delta_h: fp.delta_h.map(pct),
            h_correct: fp.h_correct.map(pct),
            h_wrong: fp.h_wrong.map(pct),
            quadrants: QuadrantFractions {
                both_correct: pct(fp.quadrants.both_correct),
                pca_only: pct(fp.quadrants.pca_only),
                ridge_only: pct(fp.quadrants.ridge_only),
                both_wrong: pct(fp.quadrants.both_wrong),
            },
            n_eval: fp.n_eval,
            n_zero_evidence: fp.n_zero_evidence,
            per_block_means: BlockId::ALL
                .iter()
                .map(|b| (b.name().to_string(), pct(fp.per_block_means[b.index()])))
                .collect(),
            units: "percent except C_D (mean subspace dimension) and counts".into(),
            conventions: ReportConventions {
                std_mode: meta.conventions.std_mode,
                epsilon: meta.conventions.epsilon,
                split_mode: meta.split_mode.clone(),
            },
            config_hash: meta.config_hash.clone(),
            code_version: meta.code_version.clone(),
        }
    }
}

pub fn write_fingerprint_json(dir: &Path, fp: &DatasetFingerprint, meta: &ReportMeta) -> Result<()> {
    write_json(dir, "fingerprint.json", &FingerprintReport::new(fp, meta))?;
    Ok(())
}

pub fn write_atlas_csv(dir: &Path, atlas: &[NodeAtlasRecord], meta: &ReportMeta) -> Result<()> {
    let mut header: Vec<String> = vec!["node".into()];
    header.extend(BlockId::ALL.iter().map(|b| format!("E_{}", b.name())));
    header.extend(BlockId::ALL.iter().map(|b| format!("pi_{}", b.name())));
    header.extend(
        [
            "R_raw",
            "R_low",
            "R_high",
            "zero_evidence",
            "pred_pca",
            "pred_ridge",
            "pred",
            "M_pca",
            "M_ridge",
            "label",
            "correct",
            "degree",
            "quadrant",
        ]
        .map(String::from),
    );
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = atlas.iter().map(|r| {
        let mut row = vec![r.node.to_string()];
        row.extend(r.evidence.iter().map(|&v| fmt_f64(v)));
        row.extend(r.block_shares.iter().map(|&v| fmt_f64(v)));
        row.extend([
            fmt_f64(r.r_raw),
            fmt_f64(r.r_low),
            fmt_f64(r.r_high),
            r.zero_evidence.to_string(),
            r.pred_pca.to_string(),
            r.pred_ridge.to_string(),
            r.pred.to_string(),
            fmt_opt(r.margin_pca),
            fmt_opt(r.margin_ridge),
            r.label.to_string(),
            r.correct.to_string(),
            r.degree.to_string(),
            r.quadrant.name().to_string(),
        ]);
        row
    });
    write_csv(dir, "atlas.csv", meta, &[], &header_ref, rows)?;
    Ok(())
}

/// Writes the plot-data tables: simplex, signal phase, decision phase, class
/// complexity, error shift and class-pair subspace overlap with confusion.
/// Values are fractions, not percent.
pub fn emit_figure_data(
    dir: &Path,
    dataset: &str,
    atlas: &[NodeAtlasRecord],
    fp: &DatasetFingerprint,
    subspaces: &[ClassSubspace],
    meta: &ReportMeta,
) -> Result<()> {
    write_csv(
        dir,
        "simplex.csv",
        meta,
        &[],
        &["dataset", "R", "L", "H"],
        [vec![
            dataset.to_string(),
            fmt_f64(fp.r_d),
            fmt_f64(fp.l_d),
            fmt_f64(fp.h_d),
        ]],
    )?;
    write_csv(
        dir,
        "signal_phase.csv",
        meta,
        &[],
        &["node", "R_low", "R_high", "correct"],
        atlas.iter().map(|r| {
            vec![
                r.node.to_string(),
                fmt_f64(r.r_low),
                fmt_f64(r.r_high),
                r.correct.to_string(),
            ]
        }),
    )?;
    write_csv(
        dir,
        "decision_phase.csv",
        meta,
        &[],
        &["node", "M_pca", "M_ridge", "quadrant"],
        atlas.iter().map(|r| {
            vec![
                r.node.to_string(),
                fmt_opt(r.margin_pca),
                fmt_opt(r.margin_ridge),
                r.quadrant.name().to_string(),
            ]
        }),
    )?;
    write_csv(
        dir,
        "class_complexity.csv",
        meta,
        &[],
        &["class", "r_c", "n_c", "energy_fraction"],
        subspaces.iter().map(|s| {
            vec![
                s.class.to_string(),
                s.rank.to_string(),
                s.n_members.to_string(),
                fmt_f64(s.energy_fraction),
            ]
        }),
    )?;
    write_csv(
        dir,
        "error_shift.csv",
        meta,
        &[],
        &["dataset", "H_correct", "H_wrong", "delta_H"],
        [vec![
            dataset.to_string(),
            fmt_opt(fp.h_correct),
            fmt_opt(fp.h_wrong),
            fmt_opt(fp.delta_h),
        ]],
    )?;

    let mut pair_rows = Vec::new();
    for (ia, a) in subspaces.iter().enumerate() {
        for b in &subspaces[ia + 1..] {
            let a_to_b = atlas.iter().filter(|r| r.label == a.class && r.pred == b.class).count();
            let b_to_a = atlas.iter().filter(|r| r.label == b.class && r.pred == a.class).count();
            pair_rows.push(vec![
                a.class.to_string(),
                b.class.to_string(),
                fmt_opt(subspace_overlap(a, b)),
                a_to_b.to_string(),
                b_to_a.to_string(),
            ]);
        }
    }
    write_csv(
        dir,
        "subspace_confusion.csv",
        meta,
        &[("overlap", "trace(Ba'BbBb'Ba)/min(ra,rb)".to_string())],
        &["class_a", "class_b", "overlap", "confusion_a_to_b", "confusion_b_to_a"],
        pair_rows,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_shares_by_hand() {
        // raw 3, low blocks averaging 1, high blocks averaging 2
        let blocks = [
            (Family::Raw, 3.0),
            (Family::Low, 0.5),
            (Family::Low, 1.5),
            (Family::Low, 1.0),
            (Family::Low, 1.0),
            (Family::Low, 1.0),
            (Family::High, 2.0),
            (Family::High, 1.0),
            (Family::High, 3.0),
        ];
        let [r, l, h] = family_shares(&blocks, 0.0);
        assert!((r - 0.5).abs() < 1e-15);
        assert!((l - 1.0 / 6.0).abs() < 1e-15);
        assert!((h - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn duplicating_a_block_keeps_family_shares() {
        let base = vec![
            (Family::Raw, 0.4),
            (Family::Low, 0.9),
            (Family::Low, 0.9),
            (Family::High, 0.2),
        ];
        let mut dup = base.clone();
        dup.push((Family::Low, 0.9));
        let a = family_shares(&base, 1e-12);
        let b = family_shares(&dup, 1e-12);
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn quadrant_from_branches() {
        assert_eq!(Quadrant::from_branches(true, true), Quadrant::BothCorrect);
        assert_eq!(Quadrant::from_branches(true, false), Quadrant::PcaOnly);
        assert_eq!(Quadrant::from_branches(false, true), Quadrant::RidgeOnly);
        assert_eq!(Quadrant::from_branches(false, false), Quadrant::BothWrong);
    }

    #[test]
    fn margin_missing_without_true_class() {
        let s = ndarray::array![0.5, 0.2, 0.9];
        assert_eq!(margin(s.view(), None), None);
        assert!((margin(s.view(), Some(1)).unwrap() - 0.3).abs() < 1e-15);
        assert!(margin(s.view(), Some(0)).unwrap() < 0.0);
        assert_eq!(margin(ndarray::array![1.0].view(), Some(0)), None);
    }

    fn record(r_high: f64, correct: bool, quadrant: Quadrant) -> NodeAtlasRecord {
        NodeAtlasRecord {
            node: 0,
            evidence: [0.0; 9],
            block_shares: [0.0; 9],
            r_raw: 0.0,
            r_low: 1.0 - r_high,
            r_high,
            zero_evidence: false,
            pred_pca: 0,
            pred_ridge: 0,
            pred: if correct { 0 } else { 1 },
            margin_pca: None,
            margin_ridge: None,
            label: 0,
            correct,
            degree: 1,
            quadrant,
        }
    }

    #[test]
    fn two_node_error_shift() {
        let atlas = [
            record(0.2, true, Quadrant::BothCorrect),
            record(0.6, false, Quadrant::BothWrong),
        ];
        let fp = fingerprint(&atlas, &[]).unwrap();
        assert!((fp.delta_h.unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(fp.delta_h.unwrap(), fp.h_wrong.unwrap() - fp.h_correct.unwrap());
        assert_eq!(fp.q_hard, 0.5);
        assert_eq!(fp.quadrants.sum(), 1.0);
    }

    #[test]
    fn all_correct_has_no_shift() {
        let atlas = [
            record(0.1, true, Quadrant::BothCorrect),
            record(0.3, true, Quadrant::BothCorrect),
        ];
        let fp = fingerprint(&atlas, &[]).unwrap();
        assert_eq!(fp.q_ridge, 0.0);
        assert_eq!(fp.q_hard, 0.0);
        assert_eq!(fp.delta_h, None);
        assert_eq!(fp.h_wrong, None);
        assert!(fingerprint(&[], &[]).is_err());
    }
}
