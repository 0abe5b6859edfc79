use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::CellData;
use super::spec::{CellSettings, ExperimentSpec};
use super::store::{self, defects_file, MANIFEST_FILE};
use crate::error::{Error, Result};

/// Bookkeeping for one annealing time of a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRecord {
    pub ta: u32,
    /// Seed of every replica, in replica order.
    pub seeds: Vec<u64>,
    /// SHA-256 of every file written for this time.
    pub files: BTreeMap<String, String>,
    pub complete: bool,
}

/// Per-cell record sufficient to regenerate every replica bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    /// Seconds since the Unix epoch when the cell was first created.
    pub created_unix: u64,
    pub settings: CellSettings,
    /// The spec of the most recent run touching this cell.
    pub spec: ExperimentSpec,
    /// Sorted by `ta`.
    pub runs: Vec<TimeRecord>,
}

impl RunManifest {
    pub fn new(spec: &ExperimentSpec, settings: CellSettings) -> Self {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix,
            settings,
            spec: spec.clone(),
            runs: Vec::new(),
        }
    }

    /// `Ok(None)` when `dir` holds no manifest.
    pub fn load(dir: &Path) -> Result<Option<Self>> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let bytes = store::read(&path)?;
        serde_json::from_slice(&bytes).map(Some).map_err(|e| Error::Parse {
            path,
            reason: e.to_string(),
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        store::write_atomic(&dir.join(MANIFEST_FILE), &store::pretty_json(self)?)
    }

    pub fn record(&self, ta: u32) -> Option<&TimeRecord> {
        self.runs.iter().find(|r| r.ta == ta)
    }

    pub fn upsert(&mut self, record: TimeRecord) {
        match self.runs.binary_search_by_key(&record.ta, |r| r.ta) {
            Ok(k) => self.runs[k] = record,
            Err(k) => self.runs.insert(k, record),
        }
    }

    pub fn completed(&self) -> impl Iterator<Item = &TimeRecord> {
        self.runs.iter().filter(|r| r.complete)
    }

    /// Checks every file of a record against its checksum.
    pub fn verify(&self, dir: &Path, record: &TimeRecord) -> Result<()> {
        for (name, sum) in &record.files {
            store::read_verified(&dir.join(name), sum)?;
        }
        Ok(())
    }

    /// Verified raw kink counts of one completed time.
    pub fn load_time(&self, dir: &Path, record: &TimeRecord) -> Result<Vec<Vec<u32>>> {
        let name = defects_file(record.ta);
        let mut raw = None;
        for (file, sum) in &record.files {
            let bytes = store::read_verified(&dir.join(file), sum)?;
            if *file == name {
                raw = Some(bytes);
            }
        }
        let path = dir.join(&name);
        let bytes = raw.ok_or_else(|| Error::Corrupt {
            path: path.clone(),
            reason: "not listed in the manifest".into(),
        })?;
        let c = self.settings.cell;
        store::parse_defects(&path, &bytes, record.seeds.len(), c.l, c.p)
    }

    /// All completed times of a cell directory.
    pub fn load_cell(&self, dir: &Path) -> Result<CellData> {
        let times = self
            .completed()
            .map(|r| Ok((r.ta, self.load_time(dir, r)?)))
            .collect::<Result<_>>()?;
        Ok(CellData {
            cell: self.settings.cell,
            times,
        })
    }
}
