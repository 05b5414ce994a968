//! Dataset files and scaffold snapshots.
//!
//! * edges: CSV `src,dst`, header optional, one undirected edge per line.
//! * features: CSV with a header row and one node per line, or the packed
//!   little-endian f32 format (`SGAF32\0\0`, u64 n, u64 d, row-major payload).
//! * labels: CSV `node,label` with a header; an empty label marks the node
//!   unlabeled and nodes absent from the file are unlabeled too.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::scaffold::FittedScaffold;
use crate::split::Split;

pub const BINARY_MAGIC: &[u8; 8] = b"SGAF32\0\0";
pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        msg: msg.into(),
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(f))
}

fn records(path: &Path) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut out = Vec::new();
    for rec in csv_reader(path)?.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        out.push((line, rec));
    }
    Ok(out)
}

fn parse_node(path: &Path, line: u64, field: &str) -> Result<usize> {
    field
        .parse::<usize>()
        .map_err(|_| parse_err(path, line, format!("node id {field:?} is not a non-negative integer")))
}

/// Edge list; a first line whose fields are not integers is a header.
pub fn read_edges(path: &Path) -> Result<Vec<(usize, usize)>> {
    Ok(read_edges_lined(path)?.into_iter().map(|(_, e)| e).collect())
}

fn read_edges_lined(path: &Path) -> Result<Vec<(u64, (usize, usize))>> {
    let recs = records(path)?;
    let mut edges = Vec::with_capacity(recs.len());
    for (k, (line, rec)) in recs.iter().enumerate() {
        if rec.len() != 2 {
            return Err(parse_err(
                path,
                *line,
                format!("expected 2 fields, found {}", rec.len()),
            ));
        }
        if k == 0 && rec.iter().any(|f| f.parse::<usize>().is_err()) {
            continue;
        }
        edges.push((
            *line,
            (parse_node(path, *line, &rec[0])?, parse_node(path, *line, &rec[1])?),
        ));
    }
    Ok(edges)
}

pub fn write_edges(path: &Path, edges: &[(usize, usize)]) -> Result<()> {
    let mut s = String::from("src,dst\n");
    for (u, v) in edges {
        s.push_str(&format!("{u},{v}\n"));
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_features_csv(path: &Path) -> Result<Array2<f64>> {
    let recs = records(path)?;
    let Some(((_, header), rows)) = recs.split_first() else {
        return Err(parse_err(path, 1, "feature file is empty"));
    };
    let d = header.len();
    let mut data = Vec::with_capacity(rows.len() * d);
    for (line, rec) in rows {
        if rec.len() != d {
            return Err(parse_err(
                path,
                *line,
                format!("expected {d} columns, found {}", rec.len()),
            ));
        }
        for field in rec {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, *line, format!("non-numeric feature {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, *line, format!("non-finite feature {field:?}")));
            }
            data.push(v);
        }
    }
    Ok(Array2::from_shape_vec((rows.len(), d), data).expect("row lengths checked"))
}

pub fn write_features_csv(path: &Path, x: &Array2<f64>) -> Result<()> {
    let mut s = (0..x.ncols()).map(|j| format!("f{j}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    for row in x.rows() {
        s.push_str(&row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_features_binary(path: &Path) -> Result<Array2<f64>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(f);
    let mut head = [0u8; 24];
    r.read_exact(&mut head)
        .map_err(|_| parse_err(path, 0, "truncated header"))?;
    if &head[..8] != BINARY_MAGIC {
        return Err(parse_err(path, 0, "bad magic; not a packed f32 feature file"));
    }
    let n = u64::from_le_bytes(head[8..16].try_into().expect("8 bytes")) as usize;
    let d = u64::from_le_bytes(head[16..24].try_into().expect("8 bytes")) as usize;
    let len = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| parse_err(path, 0, "n*d overflows"))?;
    let mut payload = Vec::with_capacity(len);
    r.read_to_end(&mut payload).map_err(|e| Error::io(path, e))?;
    if payload.len() != len {
        return Err(parse_err(
            path,
            0,
            format!(
                "payload has {} bytes, header promises {len} ({n} x {d} f32)",
                payload.len()
            ),
        ));
    }
    let data: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(parse_err(path, 0, "non-finite feature value"));
    }
    Ok(Array2::from_shape_vec((n, d), data).expect("length checked"))
}

pub fn write_features_binary(path: &Path, x: &Array2<f64>) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + 4 * x.len());
    buf.extend_from_slice(BINARY_MAGIC);
    buf.extend_from_slice(&(x.nrows() as u64).to_le_bytes());
    buf.extend_from_slice(&(x.ncols() as u64).to_le_bytes());
    for v in x.iter() {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Picks the packed reader when the file starts with the magic bytes.
pub fn read_features(path: &Path) -> Result<Array2<f64>> {
    let mut head = [0u8; 8];
    let is_binary = fs::File::open(path)
        .map_err(|e| Error::io(path, e))?
        .read_exact(&mut head)
        .is_ok()
        && &head == BINARY_MAGIC;
    if is_binary {
        read_features_binary(path)
    } else {
        read_features_csv(path)
    }
}

/// Maps dense class ids back to the raw labels found in the file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    /// `raw[c]` is the original label of class id `c`.
    pub raw: Vec<String>,
}

impl LabelMap {
    /// Integer labels sort numerically, anything else lexically.
    fn from_values<'a>(values: impl Iterator<Item = &'a str>) -> Self {
        let mut raw: Vec<String> = values.map(str::to_string).collect();
        raw.sort_by(|a, b| match (a.parse::<i64>(), b.parse::<i64>()) {
            (Ok(x), Ok(y)) => x.cmp(&y),
            (Ok(_), Err(_)) => std::cmp::Ordering::Less,
            (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
            _ => a.cmp(b),
        });
        raw.dedup();
        Self { raw }
    }

    pub fn id(&self, raw: &str) -> Option<usize> {
        self.raw.iter().position(|r| r == raw)
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }
}

pub fn read_labels(path: &Path, n: usize) -> Result<(Vec<Option<usize>>, LabelMap)> {
    let recs = records(path)?;
    let Some(((_, _header), rows)) = recs.split_first() else {
        return Err(parse_err(path, 1, "label file is empty"));
    };
    let mut assigned: BTreeMap<usize, (u64, String)> = BTreeMap::new();
    for (line, rec) in rows {
        if rec.is_empty() || rec.len() > 2 {
            return Err(parse_err(
                path,
                *line,
                format!("expected node,label, found {} fields", rec.len()),
            ));
        }
        let node = parse_node(path, *line, &rec[0])?;
        if node >= n {
            return Err(parse_err(
                path,
                *line,
                format!(
                    "unknown node id {node}: labels reach {} nodes but features have {n} rows",
                    node + 1
                ),
            ));
        }
        let label = rec.get(1).unwrap_or("").to_string();
        if assigned.insert(node, (*line, label)).is_some() {
            return Err(parse_err(path, *line, format!("node {node} labeled twice")));
        }
    }
    let map = LabelMap::from_values(assigned.values().map(|(_, l)| l.as_str()).filter(|l| !l.is_empty()));
    let mut labels = vec![None; n];
    for (node, (_, l)) in &assigned {
        if !l.is_empty() {
            labels[*node] = map.id(l);
        }
    }
    Ok((labels, map))
}

pub fn write_labels(path: &Path, labels: &[Option<usize>]) -> Result<()> {
    let mut s = String::from("node,label\n");
    for (i, l) in labels.iter().enumerate() {
        match l {
            Some(c) => s.push_str(&format!("{i},{c}\n")),
            None => s.push_str(&format!("{i},\n")),
        }
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub name: String,
    pub graph: SparseGraph,
    pub x: Array2<f64>,
    pub labels: Vec<Option<usize>>,
    pub label_map: LabelMap,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub name: String,
    pub nodes: usize,
    pub edges: usize,
    pub features: usize,
    pub labeled: usize,
    pub classes: usize,
    pub isolated: usize,
}

impl DatasetBundle {
    /// The feature file fixes `n`; edges and labels are checked against it.
    pub fn load(edges: &Path, features: &Path, labels: &Path) -> Result<Self> {
        let x = read_features(features)?;
        let n = x.nrows();
        let lined = read_edges_lined(edges)?;
        if let Some((line, (u, v))) = lined.iter().find(|(_, (u, v))| *u >= n || *v >= n) {
            return Err(parse_err(
                edges,
                *line,
                format!("unknown node id in edge ({u}, {v}): features have {n} rows"),
            ));
        }
        let raw_edges: Vec<_> = lined.into_iter().map(|(_, e)| e).collect();
        let graph = SparseGraph::from_edges(n, &raw_edges)?;
        let (labels, label_map) = read_labels(labels, n)?;
        let name = features
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("dataset")
            .to_string();
        let mut notes = Vec::new();
        let dropped = raw_edges.len() - graph.edge_count();
        if dropped > 0 {
            notes.push(format!("{dropped} self-loop or duplicate edge lines dropped"));
        }
        Ok(Self {
            name,
            graph,
            x,
            labels,
            label_map,
            notes,
        })
    }

    pub fn from_parts(
        name: impl Into<String>,
        graph: SparseGraph,
        x: Array2<f64>,
        labels: Vec<Option<usize>>,
    ) -> Result<Self> {
        if x.nrows() != graph.n() {
            return Err(Error::Shape {
                expected: format!("{} feature rows", graph.n()),
                got: format!("{} feature rows", x.nrows()),
            });
        }
        if labels.len() != graph.n() {
            return Err(Error::Shape {
                expected: format!("{} labels", graph.n()),
                got: format!("{} labels", labels.len()),
            });
        }
        let classes = labels.iter().flatten().max().map_or(0, |m| m + 1);
        let label_map = LabelMap {
            raw: (0..classes).map(|c| c.to_string()).collect(),
        };
        Ok(Self {
            name: name.into(),
            graph,
            x,
            labels,
            label_map,
            notes: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn shape_report(&self) -> ShapeReport {
        ShapeReport {
            name: self.name.clone(),
            nodes: self.n(),
            edges: self.graph.edge_count(),
            features: self.x.ncols(),
            labeled: self.labels.iter().flatten().count(),
            classes: self.label_map.len(),
            isolated: (0..self.n()).filter(|&i| self.graph.degree(i) == 0).count(),
        }
    }
}

/// Everything needed to predict without refitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaffoldSnapshot {
    pub format_version: u32,
    pub config_hash: String,
    pub code_version: String,
    pub split_mode: String,
    pub split: Split,
    pub scaffold: FittedScaffold,
}

impl ScaffoldSnapshot {
    pub fn new(
        config_hash: impl Into<String>,
        split_mode: impl Into<String>,
        split: Split,
        scaffold: FittedScaffold,
    ) -> Self {
        Self {
            format_version: SNAPSHOT_FORMAT_VERSION,
            config_hash: config_hash.into(),
            code_version: crate::report::CODE_VERSION.to_string(),
            split_mode: split_mode.into(),
            split,
            scaffold,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let snap: Self = serde_json::from_str(&s)?;
        if snap.format_version != SNAPSHOT_FORMAT_VERSION {
            return Err(Error::input(format!(
                "snapshot format {} is not supported (expected {SNAPSHOT_FORMAT_VERSION})",
                snap.format_version
            )));
        }
        Ok(snap)
    }

    pub fn save(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        crate::report::write_json(dir, name, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn put(dir: &Path, name: &str, s: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, s).unwrap();
        p
    }

    #[test]
    fn toy_bundle_with_remap() {
        let d = tempfile::tempdir().unwrap();
        let e = put(d.path(), "e.csv", "src,dst\n0,1\n1,2\n");
        let f = put(d.path(), "toy.csv", "a,b\n1,0\n0,1\n1,1\n");
        let l = put(d.path(), "l.csv", "node,label\n0,5\n1,7\n2,5\n");
        let b = DatasetBundle::load(&e, &f, &l).unwrap();
        assert_eq!(b.n(), 3);
        assert_eq!(b.labels, vec![Some(0), Some(1), Some(0)]);
        assert_eq!(b.label_map.raw, vec!["5", "7"]);
        assert_eq!(b.shape_report().edges, 2);
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let m = LabelMap::from_values(["10", "9", "x"].into_iter());
        assert_eq!(m.raw, vec!["9", "10", "x"]);
    }

    #[test]
    fn errors_carry_lines() {
        let d = tempfile::tempdir().unwrap();
        let f = put(d.path(), "f.csv", "a,b\n1,0\n0,zz\n");
        match read_features_csv(&f) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("non-numeric"));
            }
            other => panic!("{other:?}"),
        }
        let l = put(d.path(), "l.csv", "node,label\n0,1\n9,1\n");
        match read_labels(&l, 3) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("unknown node id 9") && msg.contains("10 nodes") && msg.contains("3 rows"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unlabeled_entries() {
        let d = tempfile::tempdir().unwrap();
        let l = put(d.path(), "l.csv", "node,label\n0,a\n1,\n");
        let (y, m) = read_labels(&l, 3).unwrap();
        assert_eq!(y, vec![Some(0), None, None]);
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn edges_out_of_range() {
        let d = tempfile::tempdir().unwrap();
        let e = put(d.path(), "e.csv", "0,1\n1,3\n");
        let f = put(d.path(), "f.csv", "a\n1\n2\n3\n");
        let l = put(d.path(), "l.csv", "node,label\n");
        match DatasetBundle::load(&e, &f, &l) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("3 rows"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn binary_round_trip() {
        let d = tempfile::tempdir().unwrap();
        let x = ndarray::array![[1.5, -2.0, 0.25], [0.0, 3.0, 1e-3]];
        let p = d.path().join("x.bin");
        write_features_binary(&p, &x).unwrap();
        let y = read_features(&p).unwrap();
        assert_eq!(y.dim(), (2, 3));
        for (a, b) in x.iter().zip(y.iter()) {
            assert_eq!(*a as f32 as f64, *b);
        }
        let mut bytes = fs::read(&p).unwrap();
        bytes.pop();
        fs::write(&p, bytes).unwrap();
        assert!(read_features_binary(&p).is_err());
    }
}
