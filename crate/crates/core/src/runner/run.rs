use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use super::manifest::{RunManifest, TimeRecord};
use super::report::{analyze_cell, AnalysisOptions, CellSummary};
use super::spec::{CellKey, CellSettings, ExperimentSpec};
use super::store::{self, defects_file, hist_file, ERES_FILE, SUMMARY_FILE};
use crate::anneal::anneal_with_kernel;
use crate::error::{Error, Result};
use crate::observables::{slice_defects, DefectHistogram};
use crate::pimc::BathKernel;

/// Environment variable overriding the worker count when no explicit count
/// is given.
pub const THREADS_ENV: &str = "SQA_THREADS";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; falls back to [`THREADS_ENV`], then to the number of
    /// available cores.
    pub threads: Option<usize>,
}

pub fn resolve_threads(requested: Option<usize>) -> Result<usize> {
    let n = match requested {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if n == 0 {
        return Err(Error::invalid("thread count must be >= 1"));
    }
    Ok(n)
}

/// What a run did to one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub cell: CellKey,
    pub dir: PathBuf,
    /// Annealing times simulated by this run.
    pub computed: Vec<u32>,
    /// Annealing times found complete and intact and therefore skipped.
    pub skipped: Vec<u32>,
    pub summary: CellSummary,
}

/// Final kink counts of every replica at one annealing time, in replica
/// order. Replicas are distributed over the current rayon pool.
pub fn simulate_time(
    settings: &CellSettings,
    kernel: &BathKernel,
    ta: u32,
    seeds: &[u64],
) -> Result<Vec<Vec<u32>>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let r = anneal_with_kernel(&settings.anneal_config(ta, seed), kernel)?;
            Ok(slice_defects(&r.final_field))
        })
        .collect()
}

/// Runs every cell of `spec`, skipping annealing times that an earlier run
/// already completed with intact files.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<Vec<CellReport>> {
    spec.validate()?;
    let threads = resolve_threads(opts.threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start {threads} worker threads: {e}")))?;
    fs::create_dir_all(&spec.output_dir).map_err(|e| Error::io(&spec.output_dir, e))?;
    info!("running {} cells on {threads} threads", spec.cells().len());
    pool.install(|| spec.cells().into_iter().map(|cell| run_cell(spec, cell)).collect())
}

fn run_cell(spec: &ExperimentSpec, cell: CellKey) -> Result<CellReport> {
    let dir = spec.output_dir.join(cell.dir_name());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let settings = spec.settings(cell);
    let mut manifest = match RunManifest::load(&dir)? {
        Some(m) if m.settings != settings => {
            return Err(Error::ManifestMismatch(format!(
                "{} was produced with different settings; use a fresh output directory",
                dir.display()
            )))
        }
        Some(mut m) => {
            m.spec = spec.clone();
            m
        }
        None => RunManifest::new(spec, settings),
    };
    let kernel = BathKernel::build(cell.p, cell.alpha, settings.beta_eff)?;
    let (mut computed, mut skipped) = (Vec::new(), Vec::new());

    for ta in spec.sorted_times() {
        if let Some(rec) = manifest.record(ta).filter(|r| r.complete) {
            match manifest.verify(&dir, rec) {
                Ok(()) => {
                    skipped.push(ta);
                    continue;
                }
                Err(e) => warn!("{}: rerunning ta = {ta}: {e}", dir.display()),
            }
        }
        let seeds: Vec<u64> = (0..settings.samples)
            .map(|r| cell.replica_seed(settings.master_seed, ta, r))
            .collect();
        manifest.upsert(TimeRecord {
            ta,
            seeds: seeds.clone(),
            files: BTreeMap::new(),
            complete: false,
        });
        manifest.save(&dir)?;

        let started = std::time::Instant::now();
        let raw = simulate_time(&settings, &kernel, ta, &seeds)?;
        let hist = DefectHistogram::from_replica_slices(cell.l, &raw, spec.histogram_mode)?;
        let mut files = BTreeMap::new();
        for (name, bytes) in [(defects_file(ta), store::defects_csv(&raw)), (hist_file(ta), store::hist_csv(&hist))] {
            store::write_atomic(&dir.join(&name), &bytes)?;
            files.insert(name, store::sha256_hex(&bytes));
        }
        manifest.upsert(TimeRecord {
            ta,
            seeds,
            files,
            complete: true,
        });
        manifest.save(&dir)?;
        info!(
            "{}: ta = {ta} done in {:.2} s",
            cell.dir_name(),
            started.elapsed().as_secs_f64()
        );
        computed.push(ta);
    }

    let summary = write_cell_outputs(&dir, &manifest)?;
    Ok(CellReport {
        cell,
        dir,
        computed,
        skipped,
        summary,
    })
}

/// Recomputes `eres.csv` and `summary.json` of a cell from its raw files.
fn write_cell_outputs(dir: &Path, manifest: &RunManifest) -> Result<CellSummary> {
    let data = manifest.load_cell(dir)?;
    let opts = AnalysisOptions::from_spec(&manifest.spec);
    let summary = analyze_cell(&data, &opts)?;
    store::write_atomic(&dir.join(ERES_FILE), &store::eres_csv(&data.residual_series()?))?;
    store::write_atomic(&dir.join(SUMMARY_FILE), &store::pretty_json(&summary)?)?;
    Ok(summary)
}

/// Cell directories under `path`: `path` itself when it holds a manifest,
/// otherwise its immediate subdirectories that do, in name order.
pub fn find_cells(path: &Path) -> Result<Vec<PathBuf>> {
    if path.join(store::MANIFEST_FILE).is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.join(store::MANIFEST_FILE).is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::InsufficientData(format!("no result cells under {}", path.display())));
    }
    Ok(dirs)
}

/// Re-derives every cell summary under `path` from the raw CSVs, verifying
/// checksums on the way.
pub fn analyze_results(path: &Path) -> Result<Vec<CellSummary>> {
    find_cells(path)?
        .iter()
        .map(|dir| {
            let manifest = RunManifest::load(dir)?.expect("find_cells only returns manifests");
            write_cell_outputs(dir, &manifest)
        })
        .collect()
}
