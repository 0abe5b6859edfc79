//! Plain-text result files. Replica and slice indices are 1-based on disk.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::observables::{DefectHistogram, ResidualEnergySeries};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ERES_FILE: &str = "eres.csv";
pub const SUMMARY_FILE: &str = "summary.json";

pub fn defects_file(ta: u32) -> String {
    format!("defects_ta{ta}.csv")
}

pub fn hist_file(ta: u32) -> String {
    format!("hist_ta{ta}.csv")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary sibling and a rename, so a reader never sees a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Reads a file and checks it against a recorded checksum.
pub fn read_verified(path: &Path, checksum: &str) -> Result<Vec<u8>> {
    let bytes = read(path)?;
    let actual = sha256_hex(&bytes);
    if actual != checksum {
        return Err(Error::Corrupt {
            path: path.to_path_buf(),
            reason: format!("checksum {actual} does not match recorded {checksum}"),
        });
    }
    Ok(bytes)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("serializing to memory cannot fail");
    }
    w.into_inner().expect("flushing to memory cannot fail")
}

fn from_csv<T: for<'de> Deserialize<'de>>(path: &Path, bytes: &[u8]) -> Result<Vec<T>> {
    csv::Reader::from_reader(bytes)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| csv_error(path, e))
}

#[derive(Serialize, Deserialize)]
struct DefectRow {
    replica: usize,
    slice: usize,
    n: u32,
}

/// `replica,slice,n` for every replica and slice.
pub fn defects_csv(replicas: &[Vec<u32>]) -> Vec<u8> {
    to_csv(replicas.iter().enumerate().flat_map(|(r, slices)| {
        slices.iter().enumerate().map(move |(s, &n)| DefectRow {
            replica: r + 1,
            slice: s + 1,
            n,
        })
    }))
}

/// Parses a defects file back into per-replica slice counts, checking that it
/// holds exactly `samples` complete replicas of `p` slices with `n < l`.
pub fn parse_defects(path: &Path, bytes: &[u8], samples: usize, l: usize, p: usize) -> Result<Vec<Vec<u32>>> {
    let rows: Vec<DefectRow> = from_csv(path, bytes)?;
    let corrupt = |reason: String| Error::Corrupt {
        path: path.to_path_buf(),
        reason,
    };
    if rows.len() != samples * p {
        return Err(corrupt(format!(
            "expected {} rows ({samples} replicas x {p} slices), found {}",
            samples * p,
            rows.len()
        )));
    }
    let mut out = vec![Vec::with_capacity(p); samples];
    for (k, row) in rows.iter().enumerate() {
        let (r, s) = (k / p + 1, k % p + 1);
        if row.replica != r || row.slice != s {
            return Err(corrupt(format!(
                "row {} is (replica {}, slice {}), expected ({r}, {s})",
                k + 1,
                row.replica,
                row.slice
            )));
        }
        if row.n as usize >= l {
            return Err(corrupt(format!("defect count {} out of range for L = {l}", row.n)));
        }
        out[r - 1].push(row.n);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct HistRow {
    n: usize,
    count: u64,
}

/// `n,count` for `n = 0..L-1`.
pub fn hist_csv(hist: &DefectHistogram) -> Vec<u8> {
    to_csv(hist.counts().iter().enumerate().map(|(n, &count)| HistRow { n, count }))
}

pub fn parse_hist(path: &Path, bytes: &[u8], l: usize) -> Result<DefectHistogram> {
    let rows: Vec<HistRow> = from_csv(path, bytes)?;
    let mut counts = vec![0; l];
    for row in rows {
        *counts.get_mut(row.n).ok_or_else(|| Error::Corrupt {
            path: path.to_path_buf(),
            reason: format!("n = {} out of range for L = {l}", row.n),
        })? += row.count;
    }
    DefectHistogram::from_counts(l, counts)
}

#[derive(Serialize, Deserialize)]
struct EresRow {
    ta: u32,
    mean: f64,
    stderr: Option<f64>,
    n_samples: usize,
}

/// `ta,mean,stderr,n_samples`; `stderr` is blank for single-sample points.
pub fn eres_csv(series: &ResidualEnergySeries) -> Vec<u8> {
    to_csv(series.points.iter().map(|p| EresRow {
        ta: p.ta,
        mean: p.mean,
        stderr: p.stderr,
        n_samples: p.n_samples,
    }))
}

pub fn parse_eres(path: &Path, bytes: &[u8]) -> Result<ResidualEnergySeries> {
    let rows: Vec<EresRow> = from_csv(path, bytes)?;
    Ok(ResidualEnergySeries::new(
        rows.into_iter()
            .map(|r| crate::observables::ResidualEnergyPoint {
                ta: r.ta,
                mean: r.mean,
                stderr: r.stderr,
                n_samples: r.n_samples,
            })
            .collect(),
    ))
}

/// Serializes arbitrary records as CSV with a header row.
pub fn table_csv<T: Serialize>(rows: &[T]) -> Vec<u8> {
    to_csv(rows)
}

pub fn pretty_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}
