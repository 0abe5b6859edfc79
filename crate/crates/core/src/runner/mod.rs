//! Experiment orchestration and persistence.
//!
//! An [`ExperimentSpec`] expands into `(L, P, alpha)` cells. Each cell lives in
//! its own directory named like `L64_P256_alpha0.6` holding:
//!
//! - `manifest.json`: settings, per-replica seeds and file checksums;
//! - `defects_ta{ta}.csv`: raw `replica,slice,n` kink counts (1-based);
//! - `hist_ta{ta}.csv`: pooled `n,count` histogram;
//! - `eres.csv`: `ta,mean,stderr,n_samples`;
//! - `summary.json`: cumulants, model fits and power law, recomputable from
//!   the raw files alone.

mod manifest;
mod merge;
mod report;
mod run;
mod spec;
pub mod store;

pub use manifest::{RunManifest, TimeRecord};
pub use merge::{
    merge_results, MergeReport, MERGED_CUMULANTS, MERGED_ERES, MERGED_FITS, MERGED_L1, MERGED_RATIOS,
    MERGED_TROTTER,
};
pub use report::{analyze_cell, gaussian_fit, AnalysisOptions, CellData, CellSummary, PointSummary};
pub use run::{
    analyze_results, find_cells, resolve_threads, run_experiment, simulate_time, CellReport, RunOptions,
    THREADS_ENV,
};
pub use spec::{CellKey, CellSettings, ExperimentSpec, SystemKind};
