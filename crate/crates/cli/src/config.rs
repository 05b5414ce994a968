use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sigatlas_core::dictionary::BlockSet;
use sigatlas_core::io::DatasetBundle;
use sigatlas_core::scaffold::FisherRows;
use sigatlas_core::search::Grids;
use sigatlas_core::split::SplitSpec;
use sigatlas_core::stats::Conventions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPaths {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
}

impl DataPaths {
    pub fn load(&self) -> Result<DatasetBundle> {
        DatasetBundle::load(&self.edges, &self.features, &self.labels).context("stage load-dataset")
    }

    /// SHA-256 over the three input files, so the config hash pins the data.
    pub fn digest(&self) -> Result<String> {
        let mut h = Sha256::new();
        for p in [&self.edges, &self.features, &self.labels] {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(&bytes);
        }
        Ok(hex(&h.finalize()))
    }
}

/// Everything that determines a run besides the input bytes. The output
/// directory is deliberately outside the hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataPaths,
    pub split: SplitSpec,
    pub repeats: usize,
    pub grids: Grids,
    pub blocks: BlockSet,
    pub conventions: Conventions,
    pub fisher_rows: FisherRows,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Hashed<'a> {
    split: &'a SplitSpec,
    repeats: usize,
    grids: &'a Grids,
    blocks: &'a BlockSet,
    conventions: &'a Conventions,
    fisher_rows: FisherRows,
    data_digest: String,
}

impl RunConfig {
    pub fn hash(&self) -> Result<String> {
        let h = Hashed {
            split: &self.split,
            repeats: self.repeats,
            grids: &self.grids,
            blocks: &self.blocks,
            conventions: &self.conventions,
            fisher_rows: self.fisher_rows,
            data_digest: self.data.digest()?,
        };
        Ok(short_hash(serde_json::to_string(&h)?.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        anyhow::ensure!(self.repeats >= 1, "repeats must be at least 1");
        self.grids.validate().context("invalid grid")?;
        anyhow::ensure!(
            self.conventions.epsilon >= 0.0 && self.conventions.epsilon.is_finite(),
            "epsilon must be finite and non-negative"
        );
        Ok(())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// First 16 hex digits of SHA-256.
pub fn short_hash(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))[..16].to_string()
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}
