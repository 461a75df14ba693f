//! Failure codes, report envelopes and file writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use tenspart::{DenseMatrix, TensError};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<TensError> for Failure {
    fn from(e: TensError) -> Self {
        let code = match e {
            TensError::Io { .. } | TensError::Serialization(_) => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: usize,
}

pub fn digest(path: &Path) -> CliResult<InputDigest> {
    let data = fs::read(path).map_err(|e| Failure::io(path, e))?;
    Ok(InputDigest {
        path: path.to_path_buf(),
        sha256: hex::encode(Sha256::digest(&data)),
        bytes: data.len(),
    })
}

pub fn digests<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> CliResult<Vec<InputDigest>> {
    paths.into_iter().map(|p| digest(p)).collect()
}

/// Top level of every JSON report: what ran, on what, and the result.
#[derive(Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a C,
    pub inputs: Vec<InputDigest>,
    pub warnings: Vec<String>,
    pub result: R,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("serializing {}: {e}", path.display()),
    })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))
}

/// Rows of numbers after a `# shape R,C` line.
pub fn rows_csv(rows: usize, cols: usize, row: impl Fn(usize) -> Vec<f64>) -> String {
    let mut s = format!("# shape {rows},{cols}\n");
    for i in 0..rows {
        let cells: Vec<String> = row(i).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

pub fn matrix_csv(m: &DenseMatrix) -> String {
    rows_csv(m.rows(), m.cols(), |i| m.row(i).to_vec())
}

pub fn table_csv(t: &[Vec<f64>]) -> String {
    rows_csv(t.len(), t.first().map_or(0, Vec::len), |i| t[i].clone())
}

/// One 1-based original index per line, in the new order.
pub fn permutation_text(order: &[usize]) -> String {
    let mut s = String::with_capacity(order.len() * 6);
    for &old in order {
        let _ = writeln!(s, "{}", old + 1);
    }
    s
}

/// Reads an index-range file. Each line is `MODE RANGES` with 1-based,
/// inclusive, comma-separated ranges such as `1 1-250,300`. Modes that are
/// not listed keep their full extent. `#` starts a comment.
pub fn parse_index_ranges(path: &Path, dims: [usize; 3]) -> CliResult<[Vec<usize>; 3]> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let mut sets: [Option<Vec<usize>>; 3] = [None, None, None];
    for (no, raw) in text.lines().enumerate() {
        let bad = |msg: String| Failure::validation(format!("{}:{}: {msg}", path.display(), no + 1));
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (mode, ranges) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| bad("expected a mode and a range list".into()))?;
        let mode: usize = match mode.parse() {
            Ok(m @ 1..=3) => m,
            _ => return Err(bad(format!("mode must be 1, 2 or 3, got {mode:?}"))),
        };
        let extent = dims[mode - 1];
        let set = sets[mode - 1].get_or_insert_with(Vec::new);
        for part in ranges.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (lo, hi) = part.split_once('-').unwrap_or((part, part));
            let parse = |x: &str| x.trim().parse::<usize>().map_err(|_| bad(format!("bad index {x:?}")));
            let (lo, hi) = (parse(lo)?, parse(hi)?);
            if lo == 0 || hi < lo || hi > extent {
                return Err(bad(format!("range {part} outside 1..={extent}")));
            }
            set.extend(lo - 1..hi);
        }
    }
    Ok(std::array::from_fn(|a| match sets[a].take() {
        Some(mut s) => {
            s.sort_unstable();
            s.dedup();
            s
        }
        None => (0..dims[a]).collect(),
    }))
}
