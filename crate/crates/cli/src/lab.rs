use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;
use sigatlas_core::io::{read_edges, read_features, write_edges};
use sigatlas_core::lab::{
    degree_preserving_rewire, mutual_knn_densify, paired_stats_from_deltas, run_variant, PairedResult, RewireMethod,
    Variant, VariantRun,
};
use sigatlas_core::report::{fmt_f64, write_csv, write_json, CODE_VERSION};
use sigatlas_core::split::{make_split, Split};

use crate::config::{ensure_dir, short_hash, RunConfig};
use crate::run::{read_results_accuracies, report_meta};

#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub variant: Variant,
    pub per_repeat_pct: Vec<f64>,
    pub mean_pct: f64,
    /// 1 is best; equal means share the lower rank.
    pub rank: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationReport {
    pub dataset: String,
    pub config_hash: String,
    pub code_version: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<AblationRow>,
}

fn competition_ranks(means: &[f64]) -> Vec<usize> {
    means
        .iter()
        .map(|m| 1 + means.iter().filter(|o| *o > m).count())
        .collect()
}

/// Runs each variant on the splits the full scaffold would use.
pub fn cmd_ablate(cfg: &RunConfig, variants: &[Variant]) -> Result<AblationReport> {
    cfg.validate()?;
    ensure!(!variants.is_empty(), "no variants requested");
    let bundle = cfg.data.load()?;
    let hash = cfg.hash()?;
    let meta = report_meta(cfg, &hash);
    ensure_dir(&cfg.out)?;

    let specs: Vec<_> = (0..cfg.repeats).map(|r| cfg.split.with_repeat(r)).collect();
    let splits: Vec<Split> = specs
        .iter()
        .map(|s| make_split(&bundle.labels, s))
        .collect::<sigatlas_core::Result<_>>()
        .context("stage split")?;

    let runs: Vec<VariantRun> = variants
        .iter()
        .map(|&v| {
            run_variant(
                &bundle.graph,
                bundle.x.view(),
                &bundle.labels,
                &splits,
                v,
                &cfg.grids,
                cfg.conventions,
                cfg.fisher_rows,
            )
            .with_context(|| format!("stage variant {v}"))
        })
        .collect::<Result<_>>()?;

    let means: Vec<f64> = runs.iter().map(|r| 100.0 * r.mean).collect();
    let ranks = competition_ranks(&means);
    let rows: Vec<AblationRow> = runs
        .iter()
        .zip(means.iter().zip(&ranks))
        .map(|(r, (&m, &rank))| AblationRow {
            variant: r.variant,
            per_repeat_pct: r.accuracies.iter().map(|a| 100.0 * a).collect(),
            mean_pct: m,
            rank,
        })
        .collect();

    let mut header: Vec<String> = vec!["variant".into()];
    header.extend((0..cfg.repeats).map(|r| format!("acc_pct_r{r}")));
    header.extend(["mean_pct".to_string(), "rank".to_string()]);
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    let csv_rows = rows.iter().map(|row| {
        let mut v = vec![row.variant.name().to_string()];
        v.extend(row.per_repeat_pct.iter().map(|&a| fmt_f64(a)));
        v.push(fmt_f64(row.mean_pct));
        v.push(row.rank.to_string());
        v
    });
    write_csv(
        &cfg.out,
        "ablation_report.csv",
        &meta,
        &[("dataset", bundle.name.clone())],
        &header_ref,
        csv_rows,
    )?;

    let report = AblationReport {
        dataset: bundle.name.clone(),
        config_hash: hash,
        code_version: CODE_VERSION.to_string(),
        seeds: specs.iter().map(|s| s.effective_seed()).collect(),
        rows,
    };
    write_json(&cfg.out, "ablation_report.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PrototypeMethod {
    MutualKnn { k: usize },
    Rewire { fraction: f64, dropout: f64 },
}

#[derive(Debug, Clone)]
pub struct PrototypeArgs {
    pub edges: PathBuf,
    /// Required by the kNN construction only.
    pub features: Option<PathBuf>,
    pub method: PrototypeMethod,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrototypeProvenance {
    pub method_tag: String,
    pub parameters: PrototypeMethod,
    pub seed: u64,
    pub input_edges: usize,
    pub output_edges: usize,
    pub swaps_target: Option<usize>,
    pub swaps_done: Option<usize>,
    pub attempts: Option<usize>,
    pub input_digest: String,
    pub code_version: String,
}

/// Writes `edges.csv` plus `provenance.json` into the output directory.
pub fn cmd_prototype(args: &PrototypeArgs) -> Result<PrototypeProvenance> {
    let edges = read_edges(&args.edges).context("stage load-edges")?;
    let input = sigatlas_core::graph::SparseGraph::from_edges(
        edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0),
        &edges,
    )?
    .edges()
    .to_vec();
    let mut digest_src = std::fs::read(&args.edges).with_context(|| format!("reading {}", args.edges.display()))?;
    let (out_edges, tag, swaps) = match &args.method {
        PrototypeMethod::MutualKnn { k } => {
            let Some(fp) = &args.features else {
                bail!("the mutual-kNN construction needs --features");
            };
            digest_src.extend(std::fs::read(fp).with_context(|| format!("reading {}", fp.display()))?);
            let x = read_features(fp).context("stage load-features")?;
            let e = mutual_knn_densify(x.view(), *k, &input).context("stage mutual-knn")?;
            (e, "mutual_knn_densify".to_string(), None)
        }
        PrototypeMethod::Rewire { fraction, dropout } => {
            let o = degree_preserving_rewire(&input, *fraction, args.seed, *dropout).context("stage rewire")?;
            let tag = match o.method {
                RewireMethod::DoubleEdgeSwap => "degree_preserving_swap",
                RewireMethod::UniformDropout => "uniform_dropout_fallback",
            };
            (
                o.edges,
                tag.to_string(),
                Some((o.swaps_target, o.swaps_done, o.attempts)),
            )
        }
    };
    ensure_dir(&args.out)?;
    write_edges(&args.out.join("edges.csv"), &out_edges)?;
    let prov = PrototypeProvenance {
        method_tag: tag,
        parameters: args.method.clone(),
        seed: args.seed,
        input_edges: input.len(),
        output_edges: out_edges.len(),
        swaps_target: swaps.map(|s| s.0),
        swaps_done: swaps.map(|s| s.1),
        attempts: swaps.map(|s| s.2),
        input_digest: short_hash(&digest_src),
        code_version: CODE_VERSION.to_string(),
    };
    write_json(&args.out, "provenance.json", &prov)?;
    Ok(prov)
}

#[derive(Debug, Clone, Serialize)]
pub struct PairedReport {
    pub source_a: String,
    pub source_b: String,
    pub config_hash: String,
    pub code_version: String,
    pub stats: PairedResult,
}

pub enum PairedInput {
    /// Two `results.json` files with matched seeds.
    Results(PathBuf, PathBuf),
    /// Precomputed deltas in percentage points.
    Deltas(Vec<f64>),
}

pub fn cmd_paired(input: &PairedInput, out: &Path) -> Result<PairedReport> {
    let (deltas, a, b) = match input {
        PairedInput::Results(pa, pb) => {
            let (sa, ma, aa) = read_results_accuracies(pa)?;
            let (sb, mb, ab) = read_results_accuracies(pb)?;
            ensure!(sa == sb, "repeat seeds differ; the runs are not matched pairs");
            ensure!(ma == mb, "split modes differ ({ma} vs {mb})");
            ensure!(!aa.is_empty(), "results contain no repeats");
            let d: Vec<f64> = aa.iter().zip(&ab).map(|(x, y)| x - y).collect();
            (d, pa.display().to_string(), pb.display().to_string())
        }
        PairedInput::Deltas(d) => {
            ensure!(!d.is_empty(), "no deltas given");
            (d.clone(), "deltas".to_string(), String::new())
        }
    };
    let stats = paired_stats_from_deltas(&deltas).context("stage paired-stats")?;
    let bits: Vec<u8> = deltas.iter().flat_map(|d| d.to_le_bytes()).collect();
    let report = PairedReport {
        source_a: a,
        source_b: b,
        config_hash: short_hash(&bits),
        code_version: CODE_VERSION.to_string(),
        stats,
    };
    ensure_dir(out)?;
    write_json(out, "paired.json", &report)?;
    Ok(report)
}
