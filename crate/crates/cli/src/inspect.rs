use std::path::PathBuf;

use anyhow::{ensure, Context, Result};
use sigatlas_core::atlas::{self, DatasetFingerprint, NodeAtlasRecord};
use sigatlas_core::dictionary::SignalDictionary;
use sigatlas_core::io::{DatasetBundle, ScaffoldSnapshot};
use sigatlas_core::report::ReportMeta;
use sigatlas_core::scaffold::LabeledNodes;

use crate::config::{ensure_dir, DataPaths};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalPart {
    Train,
    Val,
    Test,
}

impl std::str::FromStr for EvalPart {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(EvalPart::Train),
            "val" => Ok(EvalPart::Val),
            "test" => Ok(EvalPart::Test),
            _ => anyhow::bail!("unknown split part {s:?}; use train, val or test"),
        }
    }
}

pub struct InspectArgs {
    pub snapshot: PathBuf,
    pub data: DataPaths,
    pub part: EvalPart,
    pub out: PathBuf,
}

struct Loaded {
    snap: ScaffoldSnapshot,
    bundle: DatasetBundle,
    records: Vec<NodeAtlasRecord>,
    meta: ReportMeta,
}

fn load(args: &InspectArgs) -> Result<Loaded> {
    let snap = ScaffoldSnapshot::load(&args.snapshot).context("stage load-snapshot")?;
    let bundle = args.data.load()?;
    let sc = &snap.scaffold;
    let dict =
        SignalDictionary::build(&bundle.graph, bundle.x.view(), &sc.active_blocks).context("stage dictionary")?;
    ensure!(
        dict.p() == sc.dictionary_width,
        "dataset gives a {}-wide dictionary but the snapshot was fitted on width {}",
        dict.p(),
        sc.dictionary_width
    );
    let nodes = match args.part {
        EvalPart::Train => &snap.split.train,
        EvalPart::Val => &snap.split.val,
        EvalPart::Test => &snap.split.test,
    };
    ensure!(!nodes.is_empty(), "the selected split part is empty");
    ensure!(
        nodes.iter().all(|&i| i < bundle.n()),
        "snapshot split references nodes outside the dataset"
    );
    let eval = LabeledNodes::gather(&bundle.labels, nodes).context("stage gather-eval")?;
    let records = atlas::node_atlas(sc, &dict, &bundle.graph, &eval).context("stage atlas")?;
    let meta = ReportMeta::new(snap.config_hash.clone(), sc.conventions, snap.split_mode.clone());
    Ok(Loaded {
        snap,
        bundle,
        records,
        meta,
    })
}

/// `fingerprint.json` and the figure tables for the chosen split part.
pub fn cmd_fingerprint(args: &InspectArgs) -> Result<DatasetFingerprint> {
    let l = load(args)?;
    let fp = atlas::fingerprint(&l.records, &l.snap.scaffold.subspaces).context("stage fingerprint")?;
    ensure_dir(&args.out)?;
    atlas::write_fingerprint_json(&args.out, &fp, &l.meta)?;
    atlas::emit_figure_data(
        &args.out.join("figures"),
        &l.bundle.name,
        &l.records,
        &fp,
        &l.snap.scaffold.subspaces,
        &l.meta,
    )?;
    Ok(fp)
}

/// Per-node `atlas.csv` for the chosen split part.
pub fn cmd_atlas(args: &InspectArgs) -> Result<Vec<NodeAtlasRecord>> {
    let l = load(args)?;
    ensure_dir(&args.out)?;
    atlas::write_atlas_csv(&args.out, &l.records, &l.meta)?;
    Ok(l.records)
}
