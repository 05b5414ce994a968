//! Output helpers. Every file written carries a provenance header: the run
//! configuration hash, the crate version and the numeric conventions.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::Conventions;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub config_hash: String,
    pub code_version: String,
    pub conventions: Conventions,
    pub split_mode: String,
}

impl ReportMeta {
    pub fn new(config_hash: impl Into<String>, conventions: Conventions, split_mode: impl Into<String>) -> Self {
        Self {
            config_hash: config_hash.into(),
            code_version: CODE_VERSION.to_string(),
            conventions,
            split_mode: split_mode.into(),
        }
    }

    /// Single `# key=value ...` line placed above CSV headers.
    pub fn csv_comment(&self, extra: &[(&str, String)]) -> String {
        let std_mode = match self.conventions.std_mode {
            crate::stats::StdMode::Population => "population",
            crate::stats::StdMode::Sample => "sample",
        };
        let mut parts = vec![
            format!("config_hash={}", self.config_hash),
            format!("code_version={}", self.code_version),
            format!("std_mode={std_mode}"),
            format!("epsilon={:e}", self.conventions.epsilon),
            format!("split_mode={}", self.split_mode),
        ];
        parts.extend(extra.iter().map(|(k, v)| format!("{k}={v}")));
        format!("# {}\n", parts.join(" "))
    }
}

/// Joins `name` onto `dir`, refusing anything that would land outside it.
pub fn output_path(dir: &Path, name: &str) -> Result<PathBuf> {
    let rel = Path::new(name);
    if rel.is_absolute() || rel.components().any(|c| !matches!(c, std::path::Component::Normal(_))) {
        return Err(Error::input(format!(
            "output name {name:?} escapes the output directory"
        )));
    }
    Ok(dir.join(rel))
}

pub fn write_text(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = output_path(dir, name)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(dir, name, &s)
}

/// Writes a CSV whose first line is the provenance comment.
pub fn write_csv(
    dir: &Path,
    name: &str,
    meta: &ReportMeta,
    extra: &[(&str, String)],
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<PathBuf> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::input(e.to_string()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| Error::input(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| Error::input(e.to_string()))?;
    let mut out = meta.csv_comment(extra);
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    write_text(dir, name, &out)
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}
