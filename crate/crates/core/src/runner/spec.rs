use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analysis::{PowerLawWeighting, BOOTSTRAP_RESAMPLES};
use crate::anneal::{AnnealConfig, InitMode, SweepOrder};
use crate::error::{Error, Result};
use crate::observables::HistogramMode;
use crate::pimc::TrotterSites;
use crate::rng::{mix, replica_seed};

const MAX_EXTENT: usize = 65_536;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    /// Isolated chain; every `alpha` must be zero.
    Closed,
    /// Chain coupled to an Ohmic bath.
    Open,
}

/// A full experiment: the cartesian product of sizes, Trotter multipliers and
/// bath strengths, each annealed at every annealing time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub system: SystemKind,
    /// Chain lengths `L`.
    pub sizes: Vec<usize>,
    /// `P = m * L` for each multiplier `m`.
    #[serde(default = "default_multipliers")]
    pub trotter_multipliers: Vec<usize>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_annealing_times")]
    pub annealing_times: Vec<u32>,
    /// Independent replicas per annealing time.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_beta_eff")]
    pub beta_eff: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub histogram_mode: HistogramMode,
    /// Inclusive `[ta_min, ta_max]` for the residual-energy power law.
    #[serde(default = "default_power_law_window")]
    pub power_law_window: [u32; 2],
    #[serde(default)]
    pub power_law_weighting: PowerLawWeighting,
    /// Inclusive `[ta_min, ta_max]` for the cumulant-ratio fits.
    #[serde(default = "default_ratio_window")]
    pub ratio_window: [u32; 2],
    #[serde(default = "default_bootstrap")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub init_mode: InitMode,
    #[serde(default)]
    pub warmup_sweeps: u32,
    #[serde(default)]
    pub sweep_order: SweepOrder,
    #[serde(default)]
    pub trotter_sites: TrotterSites,
}

fn default_multipliers() -> Vec<usize> {
    vec![4]
}

fn default_alphas() -> Vec<f64> {
    vec![0.0]
}

fn default_annealing_times() -> Vec<u32> {
    (2..=13).map(|k| 1 << k).collect()
}

fn default_samples() -> usize {
    100
}

fn default_beta_eff() -> f64 {
    1.0
}

fn default_power_law_window() -> [u32; 2] {
    [16, 8192]
}

fn default_ratio_window() -> [u32; 2] {
    [4, 118]
}

fn default_bootstrap() -> usize {
    BOOTSTRAP_RESAMPLES
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentSpec {
    /// A spec with every optional field at its default.
    pub fn new(system: SystemKind, sizes: Vec<usize>) -> Self {
        ExperimentSpec {
            system,
            sizes,
            trotter_multipliers: default_multipliers(),
            alphas: default_alphas(),
            annealing_times: default_annealing_times(),
            samples: default_samples(),
            beta_eff: default_beta_eff(),
            master_seed: 0,
            histogram_mode: HistogramMode::default(),
            power_law_window: default_power_law_window(),
            power_law_weighting: PowerLawWeighting::default(),
            ratio_window: default_ratio_window(),
            bootstrap_resamples: default_bootstrap(),
            output_dir: default_output_dir(),
            init_mode: InitMode::default(),
            warmup_sweeps: 0,
            sweep_order: SweepOrder::default(),
            trotter_sites: TrotterSites::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let nonempty = |len: usize, what: &str| {
            if len == 0 {
                Err(Error::invalid(format!("{what} must not be empty")))
            } else {
                Ok(())
            }
        };
        nonempty(self.sizes.len(), "sizes")?;
        nonempty(self.trotter_multipliers.len(), "trotter_multipliers")?;
        nonempty(self.alphas.len(), "alphas")?;
        nonempty(self.annealing_times.len(), "annealing_times")?;

        for &l in &self.sizes {
            if !(2..=MAX_EXTENT).contains(&l) {
                return Err(Error::invalid(format!("L must lie in [2, {MAX_EXTENT}], got {l}")));
            }
            for &m in &self.trotter_multipliers {
                let p = l.saturating_mul(m);
                if !(2..=MAX_EXTENT).contains(&p) {
                    return Err(Error::invalid(format!(
                        "P = {m} * {l} must lie in [2, {MAX_EXTENT}]"
                    )));
                }
            }
        }
        for &a in &self.alphas {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::invalid(format!("alpha must be finite and >= 0, got {a}")));
            }
            if self.system == SystemKind::Closed && a != 0.0 {
                return Err(Error::invalid(format!(
                    "a closed system cannot have alpha = {a}; use system = \"open\""
                )));
            }
        }
        if self.annealing_times.contains(&0) {
            return Err(Error::invalid("annealing times must be >= 1"));
        }
        if self.samples == 0 {
            return Err(Error::invalid("samples must be >= 1"));
        }
        if !(self.beta_eff > 0.0 && self.beta_eff.is_finite()) {
            return Err(Error::invalid(format!("beta_eff must be > 0, got {}", self.beta_eff)));
        }
        for (name, w) in [
            ("power_law_window", self.power_law_window),
            ("ratio_window", self.ratio_window),
        ] {
            if w[0] > w[1] {
                return Err(Error::invalid(format!("{name} is empty: [{}, {}]", w[0], w[1])));
            }
        }
        Ok(())
    }

    /// Every `(L, P, alpha)` cell in the order they are run.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut cells = Vec::new();
        for &l in &self.sizes {
            for &m in &self.trotter_multipliers {
                for &alpha in &self.alphas {
                    let key = CellKey { l, p: m * l, alpha };
                    if !cells.contains(&key) {
                        cells.push(key);
                    }
                }
            }
        }
        cells
    }

    /// Annealing times, sorted and deduplicated.
    pub fn sorted_times(&self) -> Vec<u32> {
        let mut t = self.annealing_times.clone();
        t.sort_unstable();
        t.dedup();
        t
    }

    pub fn settings(&self, cell: CellKey) -> CellSettings {
        CellSettings {
            cell,
            system: self.system,
            beta_eff: self.beta_eff,
            samples: self.samples,
            master_seed: self.master_seed,
            init_mode: self.init_mode,
            warmup_sweeps: self.warmup_sweeps,
            sweep_order: self.sweep_order,
            trotter_sites: self.trotter_sites,
        }
    }
}

/// One `(L, P, alpha)` combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub l: usize,
    pub p: usize,
    pub alpha: f64,
}

impl CellKey {
    pub fn dir_name(&self) -> String {
        format!("L{}_P{}_alpha{}", self.l, self.p, self.alpha)
    }

    /// Seed of replica `r` (0-based) at annealing time `ta`. The bath strength
    /// is deliberately not mixed in, so cells differing only in `alpha` share
    /// random streams.
    pub fn replica_seed(&self, master: u64, ta: u32, r: usize) -> u64 {
        let ta_seed = mix(mix(mix(master, self.l as u64), self.p as u64), u64::from(ta));
        replica_seed(ta_seed, r as u64)
    }

    pub(crate) fn sort_key(&self) -> (usize, u64, usize) {
        (self.l, self.alpha.to_bits(), self.p)
    }
}

/// Everything that determines the raw data of a cell apart from the
/// annealing times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSettings {
    pub cell: CellKey,
    pub system: SystemKind,
    pub beta_eff: f64,
    pub samples: usize,
    pub master_seed: u64,
    pub init_mode: InitMode,
    pub warmup_sweeps: u32,
    pub sweep_order: SweepOrder,
    pub trotter_sites: TrotterSites,
}

impl CellSettings {
    pub fn anneal_config(&self, ta: u32, seed: u64) -> AnnealConfig {
        AnnealConfig {
            l: self.cell.l,
            p: self.cell.p,
            ta,
            beta_eff: self.beta_eff,
            alpha: self.cell.alpha,
            seed,
            init_mode: self.init_mode,
            warmup_sweeps: self.warmup_sweeps,
            sweep_order: self.sweep_order,
            trotter_sites: self.trotter_sites,
            record_acceptance: false,
        }
    }

    /// Settings whose data may be pooled: same cell and dynamics, any sample
    /// count or seed.
    pub fn same_dynamics(&self, other: &CellSettings) -> bool {
        self.cell == other.cell
            && self.beta_eff == other.beta_eff
            && self.init_mode == other.init_mode
            && self.warmup_sweeps == other.warmup_sweeps
            && self.sweep_order == other.sweep_order
            && self.trotter_sites == other.trotter_sites
    }
}
