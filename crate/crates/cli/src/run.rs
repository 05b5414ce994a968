use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sigatlas_core::atlas::{self, DatasetFingerprint};
use sigatlas_core::dictionary::SignalDictionary;
use sigatlas_core::io::{DatasetBundle, ScaffoldSnapshot, ShapeReport};
use sigatlas_core::report::{write_json, ReportMeta, CODE_VERSION};
use sigatlas_core::scaffold::{HyperConfig, LabeledNodes};
use sigatlas_core::search::evaluate_split;
use sigatlas_core::split::make_split;
use sigatlas_core::stats::{mean, sample_std, Conventions};

use crate::config::{ensure_dir, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepeatReport {
    pub repeat: usize,
    pub seed: u64,
    pub test_accuracy_pct: f64,
    pub val_accuracy_pct: f64,
    pub config: HyperConfig,
    pub k_eff: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracySummary {
    pub mean_pct: f64,
    /// Sample standard deviation; null for a single repeat.
    pub std_pct: Option<f64>,
    pub per_repeat_pct: Vec<f64>,
}

/// `results.json`. Contains nothing time-dependent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResults {
    pub dataset: ShapeReport,
    pub label_map: Vec<String>,
    pub config_hash: String,
    pub code_version: String,
    pub conventions: Conventions,
    pub split_mode: String,
    pub base_seed: u64,
    pub seed_derivation: String,
    pub accuracy: AccuracySummary,
    pub repeats: Vec<RepeatReport>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StageTiming {
    pub load_s: f64,
    pub dictionary_s: f64,
    pub split_s: f64,
    pub search_and_test_s: f64,
    pub atlas_s: f64,
    pub write_s: f64,
    pub total_s: f64,
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub results: RunResults,
    pub timing: StageTiming,
    pub fingerprints: Vec<DatasetFingerprint>,
}

pub fn report_meta(cfg: &RunConfig, hash: &str) -> ReportMeta {
    ReportMeta::new(hash, cfg.conventions, cfg.split.mode.name())
}

/// Full protocol: repeated splits, grid search, test scoring, and for every
/// repeat the test-node atlas, fingerprint, figure data and snapshot.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let t0 = Instant::now();
    let mut timing = StageTiming::default();
    let bundle = cfg.data.load()?;
    let hash = cfg.hash()?;
    timing.load_s = t0.elapsed().as_secs_f64();
    run_bundle(cfg, &bundle, &hash, timing, t0)
}

fn run_bundle(
    cfg: &RunConfig,
    bundle: &DatasetBundle,
    hash: &str,
    mut timing: StageTiming,
    t0: Instant,
) -> Result<RunArtifacts> {
    let meta = report_meta(cfg, hash);
    ensure_dir(&cfg.out)?;

    let t = Instant::now();
    let dict = SignalDictionary::build(&bundle.graph, bundle.x.view(), &cfg.blocks).context("stage dictionary")?;
    timing.dictionary_s = t.elapsed().as_secs_f64();

    let mut repeats = Vec::with_capacity(cfg.repeats);
    let mut fingerprints = Vec::with_capacity(cfg.repeats);
    for r in 0..cfg.repeats {
        let spec = cfg.split.with_repeat(r);
        let t = Instant::now();
        let split = make_split(&bundle.labels, &spec).with_context(|| format!("stage split (repeat {r})"))?;
        timing.split_s += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let (search, _, acc) = evaluate_split(
            &dict,
            &bundle.labels,
            &split,
            &cfg.grids,
            cfg.conventions,
            cfg.fisher_rows,
        )
        .with_context(|| format!("stage search (repeat {r})"))?;
        timing.search_and_test_s += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let test = LabeledNodes::gather(&bundle.labels, &split.test)?;
        let records = atlas::node_atlas(&search.scaffold, &dict, &bundle.graph, &test)
            .with_context(|| format!("stage atlas (repeat {r})"))?;
        let fp = atlas::fingerprint(&records, &search.scaffold.subspaces)
            .with_context(|| format!("stage fingerprint (repeat {r})"))?;
        timing.atlas_s += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let dir = cfg.out.join(format!("repeat_{r:02}"));
        ensure_dir(&dir)?;
        atlas::write_atlas_csv(&dir, &records, &meta)?;
        atlas::write_fingerprint_json(&dir, &fp, &meta)?;
        atlas::emit_figure_data(
            &dir.join("figures"),
            &bundle.name,
            &records,
            &fp,
            &search.scaffold.subspaces,
            &meta,
        )?;
        ScaffoldSnapshot::new(hash, cfg.split.mode.name(), split.clone(), search.scaffold.clone())
            .save(&dir, "snapshot.json")?;
        timing.write_s += t.elapsed().as_secs_f64();

        repeats.push(RepeatReport {
            repeat: r,
            seed: spec.effective_seed(),
            test_accuracy_pct: 100.0 * acc,
            val_accuracy_pct: 100.0 * search.val_accuracy,
            k_eff: search.scaffold.selection.k_eff,
            config: search.config,
            n_train: split.train.len(),
            n_val: split.val.len(),
            n_test: split.test.len(),
        });
        fingerprints.push(fp);
    }

    let per_repeat: Vec<f64> = repeats.iter().map(|r| r.test_accuracy_pct).collect();
    let results = RunResults {
        dataset: bundle.shape_report(),
        label_map: bundle.label_map.raw.clone(),
        config_hash: hash.to_string(),
        code_version: CODE_VERSION.to_string(),
        conventions: cfg.conventions,
        split_mode: cfg.split.mode.name().to_string(),
        base_seed: cfg.split.seed,
        seed_derivation: "repeat r uses seed base_seed + r".to_string(),
        accuracy: AccuracySummary {
            mean_pct: mean(&per_repeat).unwrap_or(0.0),
            std_pct: sample_std(&per_repeat),
            per_repeat_pct: per_repeat,
        },
        repeats,
    };

    let t = Instant::now();
    write_json(&cfg.out, "config.json", cfg)?;
    write_json(&cfg.out, "results.json", &results)?;
    timing.write_s += t.elapsed().as_secs_f64();
    timing.total_s = t0.elapsed().as_secs_f64();
    write_json(&cfg.out, "timing.json", &timing)?;
    Ok(RunArtifacts {
        results,
        timing,
        fingerprints,
    })
}

pub fn read_results_accuracies(path: &Path) -> Result<(Vec<u64>, String, Vec<f64>)> {
    let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: serde_json::Value = serde_json::from_str(&s).with_context(|| format!("parsing {}", path.display()))?;
    let seeds = v["repeats"]
        .as_array()
        .context("results file lacks a repeats array")?
        .iter()
        .map(|r| r["seed"].as_u64().context("repeat without seed"))
        .collect::<Result<Vec<_>>>()?;
    let mode = v["split_mode"]
        .as_str()
        .context("results file lacks split_mode")?
        .to_string();
    let acc = v["accuracy"]["per_repeat_pct"]
        .as_array()
        .context("results file lacks per-repeat accuracies")?
        .iter()
        .map(|a| a.as_f64().context("non-numeric accuracy"))
        .collect::<Result<Vec<_>>>()?;
    Ok((seeds, mode, acc))
}
