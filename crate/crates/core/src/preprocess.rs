//! Ingestion of coordinate files, label lists and record logs, and the
//! per-slice normalizations.
//!
//! On disk every index is 1-based; in memory it is 0-based.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TensError};
use crate::lowrank::symmetry_tolerance;
use crate::tensor::{Entry, SparseTensor3};

/// Names for the indices of one mode.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelTable {
    labels: Vec<String>,
}

impl LabelTable {
    pub fn new(labels: Vec<String>) -> Self {
        Self { labels }
    }

    /// `"1"`, `"2"`, ... for a mode without names.
    pub fn numbered(n: usize) -> Self {
        Self::new((1..=n).map(|i| i.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn check_extent(&self, extent: usize) -> Result<()> {
        if self.len() != extent {
            return Err(TensError::mismatch(format!(
                "{} labels for a mode of extent {extent}",
                self.len()
            )));
        }
        Ok(())
    }

    /// The labels at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self::new(indices.iter().map(|&i| self.labels[i].clone()).collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| TensError::io(path, e))?;
        let mut labels = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| TensError::io(path, e))?;
            labels.push(line.trim_end_matches('\r').to_string());
        }
        Ok(Self { labels })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = create(path)?;
        for l in &self.labels {
            writeln!(out, "{l}").map_err(|e| TensError::io(path, e))?;
        }
        out.flush().map_err(|e| TensError::io(path, e))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| TensError::io(path, e))
}

/// Reads a `.tns` coordinate file. `dims` overrides both the header and the
/// extents inferred from the largest index.
pub fn load_coordinate_file(path: impl AsRef<Path>, dims: Option<[usize; 3]>) -> Result<SparseTensor3> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| TensError::io(path, e))?;
    parse_coordinates(BufReader::new(file), path, dims)
}

/// Parses `.tns` text: `i j k v` lines, `#` comments, and an optional
/// `dims l m n` line before the first entry.
pub fn parse_coordinates(
    reader: impl BufRead,
    origin: &Path,
    dims: Option<[usize; 3]>,
) -> Result<SparseTensor3> {
    let parse_err = |line: usize, message: String| TensError::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut header: Option<[usize; 3]> = None;
    let mut raw: Vec<(usize, usize, usize, f64, usize)> = Vec::new();
    let mut max = [0usize; 3];
    for (no, line) in reader.lines().enumerate() {
        let no = no + 1;
        let line = line.map_err(|e| TensError::io(origin, e))?;
        let text = line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields[0] == "dims" {
            if header.is_some() || !raw.is_empty() {
                return Err(parse_err(no, "`dims` must precede all entries".into()));
            }
            if fields.len() != 4 {
                return Err(parse_err(no, "expected `dims l m n`".into()));
            }
            let mut d = [0; 3];
            for (slot, f) in d.iter_mut().zip(&fields[1..]) {
                *slot = match f.parse::<usize>() {
                    Ok(v) if v > 0 => v,
                    _ => return Err(parse_err(no, format!("invalid extent `{f}`"))),
                };
            }
            header = Some(d);
            continue;
        }
        if fields.len() != 4 {
            return Err(parse_err(no, format!("expected 4 fields, found {}", fields.len())));
        }
        let mut idx = [0usize; 3];
        for (a, f) in fields[..3].iter().enumerate() {
            idx[a] = match f.parse::<usize>() {
                Ok(v) if v >= 1 => v - 1,
                Ok(_) => return Err(parse_err(no, "indices are 1-based; found 0".into())),
                Err(_) => return Err(parse_err(no, format!("invalid index `{f}`"))),
            };
            max[a] = max[a].max(idx[a] + 1);
        }
        let value: f64 = fields[3]
            .parse()
            .map_err(|_| parse_err(no, format!("invalid value `{}`", fields[3])))?;
        if !value.is_finite() {
            return Err(parse_err(no, format!("non-finite value `{}`", fields[3])));
        }
        raw.push((idx[0], idx[1], idx[2], value, no));
    }
    let dims = match dims.or(header) {
        Some(d) => d,
        None if raw.is_empty() => {
            return Err(parse_err(0, "no entries and no `dims` line".into()));
        }
        None => max,
    };
    if let Some(&(.., no)) = raw
        .iter()
        .find(|&&(i, j, k, ..)| i >= dims[0] || j >= dims[1] || k >= dims[2])
    {
        return Err(parse_err(no, format!("index exceeds extents {dims:?}")));
    }
    SparseTensor3::new(dims, raw.into_iter().map(|(i, j, k, v, _)| (i, j, k, v)))
}

/// Writes the canonical `.tns` form: a `dims` line, then entries in
/// canonical order with round-trip value formatting.
pub fn save_coordinate_file(tensor: &SparseTensor3, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    write_coordinates(tensor, &mut out).map_err(|e| TensError::io(path, e))?;
    out.flush().map_err(|e| TensError::io(path, e))
}

pub fn write_coordinates(tensor: &SparseTensor3, out: &mut impl Write) -> std::io::Result<()> {
    let [l, m, n] = tensor.dims();
    writeln!(out, "dims {l} {m} {n}")?;
    for e in tensor.entries() {
        writeln!(out, "{} {} {} {:?}", e.i + 1, e.j + 1, e.k + 1, e.value)?;
    }
    Ok(())
}

/// Timestamped (source, destination) records with ids mapped to a
/// first-seen vocabulary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordLog {
    records: Vec<(usize, usize, String)>,
    vocabulary: Vec<String>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    source: String,
    destination: String,
    timestamp: String,
}

impl RecordLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, source: &str, destination: &str, timestamp: &str) {
        let s = self.intern(source);
        let d = self.intern(destination);
        self.records.push((s, d, timestamp.to_string()));
    }

    fn intern(&mut self, id: &str) -> usize {
        if let Some(&p) = self.index.get(id) {
            return p;
        }
        let p = self.vocabulary.len();
        self.vocabulary.push(id.to_string());
        self.index.insert(id.to_string(), p);
        p
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[(usize, usize, String)] {
        &self.records
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    /// Reads CSV with a `source,destination,timestamp` header.
    pub fn from_csv(reader: impl Read, origin: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut log = Self::new();
        for (no, row) in rdr.deserialize::<RawRecord>().enumerate() {
            let row = row.map_err(|e| TensError::Parse {
                path: origin.to_path_buf(),
                line: e.position().map_or(no + 2, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            log.push(&row.source, &row.destination, &row.timestamp);
        }
        Ok(log)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| TensError::io(path, e))?;
        Self::from_csv(BufReader::new(file), path)
    }
}

/// Indicator tensor of who talked to whom in consecutive blocks of
/// `bin_size` records, symmetrized over direction.
///
/// Bins are cut over the full log. With `restrict_to_bidirectional`, only ids
/// that appear both as a source and as a destination somewhere in the log are
/// kept (in first-seen order).
pub fn bin_and_symmetrize(
    log: &RecordLog,
    bin_size: usize,
    restrict_to_bidirectional: bool,
) -> Result<(SparseTensor3, LabelTable)> {
    if bin_size == 0 {
        return Err(TensError::InvalidArgument("bin size must be at least 1".into()));
    }
    if log.is_empty() {
        return Err(TensError::EmptyLog);
    }
    let v = log.vocabulary.len();
    let keep: Vec<Option<usize>> = if restrict_to_bidirectional {
        let (mut sent, mut received) = (vec![false; v], vec![false; v]);
        for &(s, d, _) in &log.records {
            sent[s] = true;
            received[d] = true;
        }
        let mut next = 0;
        (0..v)
            .map(|id| {
                (sent[id] && received[id]).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    } else {
        (0..v).map(Some).collect()
    };
    let kept: Vec<usize> = (0..v).filter(|&id| keep[id].is_some()).collect();
    if kept.is_empty() {
        return Err(TensError::InvalidArgument(
            "no id both sent and received a record".into(),
        ));
    }
    let bins = log.len().div_ceil(bin_size);
    let mut raw = Vec::with_capacity(2 * log.len());
    for (r, &(s, d, _)) in log.records.iter().enumerate() {
        if let (Some(a), Some(b)) = (keep[s], keep[d]) {
            let k = r / bin_size;
            raw.push(Entry { i: a, j: b, k, value: 1.0 });
            raw.push(Entry { i: b, j: a, k, value: 1.0 });
        }
    }
    raw.sort_by_key(|e| (e.k, e.i, e.j));
    raw.dedup_by_key(|e| (e.k, e.i, e.j));
    let n = kept.len();
    let tensor = SparseTensor3::from_raw([n, n, bins], raw);
    let labels = LabelTable::new(kept.iter().map(|&id| log.vocabulary[id].clone()).collect());
    Ok((tensor, labels))
}

fn check_nonnegative(t: &SparseTensor3) -> Result<()> {
    match t.entries().iter().find(|e| e.value < 0.0) {
        Some(e) => Err(TensError::NegativeEntry {
            i: e.i,
            j: e.j,
            k: e.k,
            value: e.value,
        }),
        None => Ok(()),
    }
}

/// Row sums (or column sums) of one slice, scattered into a reusable buffer.
fn degrees(slice: &[Entry], by_row: bool, buf: &mut [f64], touched: &mut Vec<usize>) {
    for &p in touched.iter() {
        buf[p] = 0.0;
    }
    touched.clear();
    for e in slice {
        let p = if by_row { e.i } else { e.j };
        if buf[p] == 0.0 {
            touched.push(p);
        }
        buf[p] += e.value;
    }
}

fn inv_sqrt(d: f64) -> f64 {
    if d > 0.0 {
        1.0 / d.sqrt()
    } else {
        0.0
    }
}

/// `D^{-1/2} A D^{-1/2}` for every frontal slice `A`, with `d = A e`.
/// Zero-degree rows stay zero.
pub fn normalize_slices_adjacency(t: &SparseTensor3) -> Result<SparseTensor3> {
    check_nonnegative(t)?;
    let tol = symmetry_tolerance(t.max_abs());
    if !t.is_12_symmetric(tol) {
        return Err(TensError::Asymmetric(
            "adjacency normalization needs symmetric slices".into(),
        ));
    }
    let [l, ..] = t.dims();
    let mut d = vec![0.0; l];
    let mut touched = Vec::new();
    let mut out = Vec::with_capacity(t.nnz());
    for (_, slice) in t.slices() {
        degrees(slice, true, &mut d, &mut touched);
        out.extend(slice.iter().map(|e| Entry {
            value: e.value * inv_sqrt(d[e.i]) * inv_sqrt(d[e.j]),
            ..*e
        }));
    }
    Ok(SparseTensor3::from_raw(t.dims(), out))
}

/// `D_r^{-1/2} A D_c^{-1/2}` for every frontal slice, with row degrees
/// `A e` and column degrees `Aᵀ e` taken per slice.
pub fn nonsymmetric_normalize(t: &SparseTensor3) -> Result<SparseTensor3> {
    check_nonnegative(t)?;
    let [l, m, _] = t.dims();
    let (mut dr, mut dc) = (vec![0.0; l], vec![0.0; m]);
    let (mut tr, mut tc) = (Vec::new(), Vec::new());
    let mut out = Vec::with_capacity(t.nnz());
    for (_, slice) in t.slices() {
        degrees(slice, true, &mut dr, &mut tr);
        degrees(slice, false, &mut dc, &mut tc);
        out.extend(slice.iter().map(|e| Entry {
            value: e.value * inv_sqrt(dr[e.i]) * inv_sqrt(dc[e.j]),
            ..*e
        }));
    }
    Ok(SparseTensor3::from_raw(t.dims(), out))
}

/// Scales every frontal slice to unit Frobenius norm. Empty slices are an
/// error unless `skip_empty` is set, in which case they stay zero.
pub fn normalize_slices_frobenius(t: &SparseTensor3, skip_empty: bool) -> Result<SparseTensor3> {
    let n = t.dims()[2];
    let mut norms = vec![0.0; n];
    for (k, slice) in t.slices() {
        norms[k] = slice.iter().map(|e| e.value * e.value).sum::<f64>().sqrt();
    }
    if !skip_empty {
        if let Some(k) = norms.iter().position(|&x| x == 0.0) {
            return Err(TensError::ZeroSlice(k));
        }
    }
    Ok(t.map_values(|e| e.value / norms[e.k]))
}

/// Which slice normalization to apply before analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    Adjacency,
    Frobenius,
    None,
}

/// Applies `kind`; adjacency normalization of a non-symmetric tensor uses
/// separate row and column degrees.
pub fn normalize(t: &SparseTensor3, kind: Normalization, symmetric: bool) -> Result<SparseTensor3> {
    match (kind, symmetric) {
        (Normalization::Adjacency, true) => normalize_slices_adjacency(t),
        (Normalization::Adjacency, false) => nonsymmetric_normalize(t),
        (Normalization::Frobenius, _) => normalize_slices_frobenius(t, true),
        (Normalization::None, _) => Ok(t.clone()),
    }
}

/// Path helper used by callers writing sibling label files.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
