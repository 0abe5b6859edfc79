use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde::Serialize;

use super::manifest::RunManifest;
use super::report::{analyze_cell, AnalysisOptions, CellData, CellSummary};
use super::run::find_cells;
use super::spec::{CellKey, CellSettings};
use super::store::{self, defects_file};
use crate::analysis::FitResult;
use crate::error::{Error, Result};

pub const MERGED_ERES: &str = "eres.csv";
pub const MERGED_CUMULANTS: &str = "cumulants.csv";
pub const MERGED_L1: &str = "l1.csv";
pub const MERGED_RATIOS: &str = "ratios.csv";
pub const MERGED_TROTTER: &str = "trotter.csv";
pub const MERGED_FITS: &str = "fits.json";

/// Outcome of [`merge_results`].
#[derive(Debug, Clone, PartialEq)]
pub struct MergeReport {
    pub summaries: Vec<CellSummary>,
    /// `(cell, ta)` pairs found in more than one input with identical seeds
    /// and data; kept once.
    pub duplicates: Vec<(CellKey, u32)>,
}

struct Group {
    settings: CellSettings,
    options: AnalysisOptions,
    /// `ta -> (seeds, defects checksum, data)`
    times: BTreeMap<u32, (Vec<u64>, String, Vec<Vec<u32>>)>,
}

/// Pools the cells found under `inputs` by `(L, P, alpha)`, re-analyzes them
/// and writes the cross-cell tables into `out`. `options` overrides the
/// analysis settings recorded in the first manifest of each cell.
pub fn merge_results(inputs: &[PathBuf], out: &Path, options: Option<AnalysisOptions>) -> Result<MergeReport> {
    if inputs.is_empty() {
        return Err(Error::InsufficientData("nothing to merge".into()));
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut duplicates = Vec::new();

    for dir in inputs.iter().map(|p| find_cells(p)).collect::<Result<Vec<_>>>()?.concat() {
        let manifest = RunManifest::load(&dir)?.expect("find_cells only returns manifests");
        let settings = manifest.settings;
        let k = match groups.iter().position(|g| g.settings.cell == settings.cell) {
            Some(k) => {
                if !groups[k].settings.same_dynamics(&settings) {
                    return Err(Error::ManifestMismatch(format!(
                        "{} was simulated with different dynamics than an earlier input for {}",
                        dir.display(),
                        settings.cell.dir_name()
                    )));
                }
                k
            }
            None => {
                groups.push(Group {
                    settings,
                    options: options.unwrap_or_else(|| AnalysisOptions::from_spec(&manifest.spec)),
                    times: BTreeMap::new(),
                });
                groups.len() - 1
            }
        };
        for rec in manifest.completed() {
            let data = manifest.load_time(&dir, rec)?;
            let sum = rec.files.get(&defects_file(rec.ta)).cloned().unwrap_or_default();
            match groups[k].times.get(&rec.ta) {
                Some((seeds, existing, _)) if *seeds == rec.seeds && *existing == sum => {
                    warn!(
                        "{}: ta = {} appears twice with identical seeds; keeping one copy",
                        settings.cell.dir_name(),
                        rec.ta
                    );
                    duplicates.push((settings.cell, rec.ta));
                }
                Some(_) => {
                    return Err(Error::ManifestMismatch(format!(
                        "{}: ta = {} appears in several inputs with different seeds or data",
                        settings.cell.dir_name(),
                        rec.ta
                    )))
                }
                None => {
                    groups[k].times.insert(rec.ta, (rec.seeds.clone(), sum, data));
                }
            }
        }
    }

    groups.sort_by_key(|g| g.settings.cell.sort_key());
    let summaries = groups
        .iter()
        .map(|g| {
            let data = CellData {
                cell: g.settings.cell,
                times: g.times.iter().map(|(&ta, (_, _, d))| (ta, d.clone())).collect(),
            };
            analyze_cell(&data, &g.options)
        })
        .collect::<Result<Vec<_>>>()?;

    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_tables(out, &summaries)?;
    Ok(MergeReport { summaries, duplicates })
}

#[derive(Serialize)]
struct EresRow {
    l: usize,
    p: usize,
    alpha: f64,
    ta: u32,
    mean: f64,
    stderr: Option<f64>,
    n_samples: usize,
}

#[derive(Serialize)]
struct CumulantRow {
    l: usize,
    p: usize,
    alpha: f64,
    ta: u32,
    k1: Option<f64>,
    k2: Option<f64>,
    k3: Option<f64>,
    k1_err: Option<f64>,
    k2_err: Option<f64>,
    k3_err: Option<f64>,
}

#[derive(Serialize)]
struct L1Row {
    l: usize,
    p: usize,
    alpha: f64,
    ta: u32,
    gaussian_l1: Option<f64>,
    boltzmann_l1: Option<f64>,
    beta_bl: Option<f64>,
    beta_bl_at_bound: bool,
}

#[derive(Serialize)]
struct RatioRow {
    l: usize,
    p: usize,
    alpha: f64,
    ta_min: u32,
    ta_max: u32,
    n_points: usize,
    k2_over_k1: f64,
    k2_err: f64,
    r_squared_k2: f64,
    k3_over_k1: f64,
    k3_err: f64,
    r_squared_k3: f64,
}

#[derive(Serialize)]
struct TrotterRow {
    l: usize,
    alpha: f64,
    ta: u32,
    p: usize,
    mean: f64,
    stderr: Option<f64>,
    n_samples: usize,
}

#[derive(Serialize)]
struct FitEntry<'a> {
    cell: CellKey,
    power_law: &'a Option<FitResult>,
    power_law_error: &'a Option<String>,
    cumulant_ratios: &'a Option<crate::analysis::RatioFit>,
    ratio_error: &'a Option<String>,
}

fn write_tables(out: &Path, summaries: &[CellSummary]) -> Result<()> {
    let mut eres = Vec::new();
    let mut cumulants = Vec::new();
    let mut l1 = Vec::new();
    let mut ratios = Vec::new();
    let mut trotter = Vec::new();
    for s in summaries {
        let CellKey { l, p, alpha } = s.cell;
        for pt in &s.points {
            let e = &pt.e_res;
            eres.push(EresRow {
                l,
                p,
                alpha,
                ta: pt.ta,
                mean: e.mean,
                stderr: e.stderr,
                n_samples: e.n_samples,
            });
            trotter.push(TrotterRow {
                l,
                alpha,
                ta: pt.ta,
                p,
                mean: e.mean,
                stderr: e.stderr,
                n_samples: e.n_samples,
            });
            let c = pt.cumulants.as_ref();
            let err = |k: usize| c.and_then(|c| c.errors).map(|e| e[k]);
            cumulants.push(CumulantRow {
                l,
                p,
                alpha,
                ta: pt.ta,
                k1: c.map(|c| c.k1),
                k2: c.map(|c| c.k2),
                k3: c.map(|c| c.k3),
                k1_err: err(0),
                k2_err: err(1),
                k3_err: err(2),
            });
            l1.push(L1Row {
                l,
                p,
                alpha,
                ta: pt.ta,
                gaussian_l1: pt.gaussian.as_ref().and_then(|g| g.metric("l1")),
                boltzmann_l1: pt.boltzmann.metric("l1"),
                beta_bl: pt.boltzmann.param("beta_bl"),
                beta_bl_at_bound: pt.boltzmann.at_bound,
            });
        }
        if let Some(r) = &s.cumulant_ratios {
            ratios.push(RatioRow {
                l,
                p,
                alpha,
                ta_min: s.options.ratio_window[0],
                ta_max: s.options.ratio_window[1],
                n_points: r.n_points,
                k2_over_k1: r.k2_over_k1,
                k2_err: r.k2_err,
                r_squared_k2: r.r_squared_k2,
                k3_over_k1: r.k3_over_k1,
                k3_err: r.k3_err,
                r_squared_k3: r.r_squared_k3,
            });
        }
    }
    trotter.sort_by(|a, b| {
        (a.l, a.alpha.to_bits(), a.ta, a.p).cmp(&(b.l, b.alpha.to_bits(), b.ta, b.p))
    });
    let fits: Vec<FitEntry> = summaries
        .iter()
        .map(|s| FitEntry {
            cell: s.cell,
            power_law: &s.power_law,
            power_law_error: &s.power_law_error,
            cumulant_ratios: &s.cumulant_ratios,
            ratio_error: &s.ratio_error,
        })
        .collect();

    store::write_atomic(&out.join(MERGED_ERES), &store::table_csv(&eres))?;
    store::write_atomic(&out.join(MERGED_CUMULANTS), &store::table_csv(&cumulants))?;
    store::write_atomic(&out.join(MERGED_L1), &store::table_csv(&l1))?;
    store::write_atomic(&out.join(MERGED_RATIOS), &store::table_csv(&ratios))?;
    store::write_atomic(&out.join(MERGED_TROTTER), &store::table_csv(&trotter))?;
    store::write_atomic(&out.join(MERGED_FITS), &store::pretty_json(&fits)?)
}
