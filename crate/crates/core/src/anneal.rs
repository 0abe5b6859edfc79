//! Time-dependent single-flip Metropolis dynamics.
//!
//! One unit of annealing time is one sweep of `L * P` update attempts. The
//! couplings follow [`schedule_at`] for `t = 0, ..., ta - 1`; the `Gamma = 0`
//! endpoint is only ever measured, never simulated.
//!
//! Two inner loops exist. Without a bath the local energy change takes one of
//! a handful of values, so acceptance probabilities are tabulated once per
//! sweep. With a bath the cached bath field is read and `exp` is evaluated per
//! attempt. Both consume random numbers identically and produce bit-identical
//! trajectories when the kernel is zero.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pimc::{
    schedule_at, BathKernel, CouplingSet, EffectiveModel, ScheduleParams, SpinField, TrotterSites,
};
use crate::rng::{proposal, rng_from_seed, ReplicaRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    #[default]
    Random,
    AllUp,
}

/// How spins are picked within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    /// `L * P` independent uniformly random `(site, slice)` picks.
    #[default]
    Random,
    /// Typewriter order, site-major.
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    pub l: usize,
    pub p: usize,
    /// Annealing time in sweeps.
    pub ta: u32,
    pub beta_eff: f64,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default)]
    pub init_mode: InitMode,
    /// Sweeps at the `t = 0` couplings before the schedule starts.
    #[serde(default)]
    pub warmup_sweeps: u32,
    #[serde(default)]
    pub sweep_order: SweepOrder,
    #[serde(default)]
    pub trotter_sites: TrotterSites,
    /// Keep the per-sweep acceptance counts in the result.
    #[serde(default)]
    pub record_acceptance: bool,
}

impl AnnealConfig {
    /// Closed chain with `P = 4L`, `beta_eff = 1` and random initial spins.
    pub fn new(l: usize, ta: u32, seed: u64) -> Self {
        AnnealConfig {
            l,
            p: 4 * l,
            ta,
            beta_eff: 1.0,
            alpha: 0.0,
            seed,
            init_mode: InitMode::Random,
            warmup_sweeps: 0,
            sweep_order: SweepOrder::Random,
            trotter_sites: TrotterSites::All,
            record_acceptance: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(Error::invalid(format!("L must be >= 2, got {}", self.l)));
        }
        if self.p < 2 {
            return Err(Error::invalid(format!("P must be >= 2, got {}", self.p)));
        }
        if self.ta == 0 {
            return Err(Error::invalid("ta must be >= 1"));
        }
        if !(self.beta_eff > 0.0 && self.beta_eff.is_finite()) {
            return Err(Error::invalid(format!("beta_eff must be > 0, got {}", self.beta_eff)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<ScheduleParams> {
        ScheduleParams::new(self.ta, self.beta_eff, self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaResult {
    pub final_field: SpinField,
    /// Accepted flips per annealing sweep, when requested.
    pub acceptance: Option<Vec<u64>>,
    pub seed: u64,
    pub config: AnnealConfig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub attempts: u64,
    pub accepted: u64,
}

/// One Metropolis decision for `S_i(tau)` given a uniform `u` in `[0, 1)`:
/// the flip is applied iff `u < min(1, exp(-beta_eff * dE))`.
pub fn metropolis_attempt(
    field: &mut SpinField,
    i: usize,
    tau: usize,
    model: &EffectiveModel,
    u: f64,
) -> Result<bool> {
    let de = model.delta_energy(field, i, tau)?;
    let accept = de <= 0.0 || u < (-model.couplings.beta_eff * de).exp();
    if accept {
        field.apply_flip_unchecked(i, tau, model.kernel);
    }
    Ok(accept)
}

/// Performs exactly `L * P` Metropolis attempts.
pub fn sweep(
    field: &mut SpinField,
    model: &EffectiveModel,
    order: SweepOrder,
    rng: &mut ReplicaRng,
) -> Result<SweepStats> {
    if model.kernel.p() != field.p() {
        return Err(Error::DimensionMismatch {
            expected: format!("kernel with P = {}", field.p()),
            found: format!("kernel with P = {}", model.kernel.p()),
        });
    }
    // A local copy keeps the generator state in registers across the loop.
    let mut local = rng.clone();
    let accepted = if model.kernel.is_zero() && !field.has_bath_cache() {
        sweep_tabulated(field, model, order, &mut local)
    } else {
        sweep_general(field, model, order, &mut local)
    };
    *rng = local;
    Ok(SweepStats {
        attempts: (field.l() * field.p()) as u64,
        accepted,
    })
}

/// `min(1, exp(-beta_eff * dE))`.
#[inline(always)]
fn acceptance(de: f64, beta_eff: f64) -> f64 {
    if de <= 0.0 {
        1.0
    } else {
        (-beta_eff * de).exp()
    }
}

/// Acceptance table indexed by `[s > 0][spatial + 2][trotter + 2]`.
fn acceptance_table(model: &EffectiveModel) -> [f64; 50] {
    let j = model.couplings.j;
    let g = model.trotter_weight();
    let mut table = [0.0; 50];
    for (si, s) in [-1.0, 1.0].into_iter().enumerate() {
        for a in -2i32..=2 {
            for b in -2i32..=2 {
                let de = crate::pimc::local_delta(s, f64::from(a), f64::from(b), 0.0, j, g);
                table[si * 25 + (a + 2) as usize * 5 + (b + 2) as usize] =
                    acceptance(de, model.couplings.beta_eff);
            }
        }
    }
    table
}

/// Feeds `L * P` proposals `(site, slice, x)` to `attempt` in the requested
/// order, where `x` is a uniform 32-bit integer and `u = x / 2^32`.
#[inline(always)]
fn drive(l: usize, p: usize, order: SweepOrder, rng: &mut ReplicaRng, mut attempt: impl FnMut(usize, usize, u64)) {
    match order {
        SweepOrder::Random => {
            for _ in 0..l * p {
                let (i, tau, x) = proposal(rng, l as u32, p as u32);
                attempt(i, tau, x);
            }
        }
        SweepOrder::Sequential => {
            for i in 0..l {
                for tau in 0..p {
                    attempt(i, tau, rng.next_u64() >> 32);
                }
            }
        }
    }
}

const TWO_POW_32: f64 = 4_294_967_296.0;

fn sweep_tabulated(field: &mut SpinField, model: &EffectiveModel, order: SweepOrder, rng: &mut ReplicaRng) -> u64 {
    // x < ceil(prob * 2^32)  <=>  x / 2^32 < prob, for integer x; the scaling is exact.
    let thresholds = acceptance_table(model).map(|prob| (prob * TWO_POW_32).ceil() as u64);
    let (l, p) = (field.l(), field.p());
    let trotter_sites = model.sites.count(l);
    let spins = field.padded_mut();
    let mut accepted = 0;
    drive(l, p, order, rng, |i, tau, x| {
        let idx = (i + 1) * p + tau;
        let s = spins[idx];
        let a = spins[idx - p] + spins[idx + p];
        let b = if i < trotter_sites {
            let prev = if tau == 0 { idx + p - 1 } else { idx - 1 };
            let next = if tau + 1 == p { idx + 1 - p } else { idx + 1 };
            spins[prev] + spins[next]
        } else {
            0
        };
        let key = usize::from(s > 0) * 25 + (a + 2) as usize * 5 + (b + 2) as usize;
        let flip = x < thresholds[key];
        spins[idx] = if flip { -s } else { s };
        accepted += u64::from(flip);
    });
    accepted
}

fn sweep_general(field: &mut SpinField, model: &EffectiveModel, order: SweepOrder, rng: &mut ReplicaRng) -> u64 {
    let (l, p) = (field.l(), field.p());
    let beta = model.couplings.beta_eff;
    let mut accepted = 0;
    drive(l, p, order, rng, |i, tau, x| {
        let de = model.delta_energy_unchecked(field, i, tau);
        if (x as f64) / TWO_POW_32 < acceptance(de, beta) {
            field.apply_flip_unchecked(i, tau, model.kernel);
            accepted += 1;
        }
    });
    accepted
}

/// Runs one replica from initialization to the end of the schedule.
pub fn anneal_run(config: &AnnealConfig) -> Result<ReplicaResult> {
    config.validate()?;
    let kernel = BathKernel::build(config.p, config.alpha, config.beta_eff)?;
    anneal_with_kernel(config, &kernel)
}

/// As [`anneal_run`] with an explicit kernel. The bath cache is enabled
/// whenever `config.alpha > 0`, whatever the kernel holds.
pub fn anneal_with_kernel(config: &AnnealConfig, kernel: &BathKernel) -> Result<ReplicaResult> {
    config.validate()?;
    if kernel.p() != config.p {
        return Err(Error::DimensionMismatch {
            expected: format!("kernel with P = {}", config.p),
            found: format!("kernel with P = {}", kernel.p()),
        });
    }
    let schedule = config.schedule()?;
    let mut rng = rng_from_seed(config.seed);
    let mut field = match config.init_mode {
        InitMode::Random => SpinField::new_random(config.l, config.p, &mut rng)?,
        InitMode::AllUp => SpinField::new_all_up(config.l, config.p)?,
    };
    if config.alpha > 0.0 {
        field.enable_bath_cache(kernel)?;
    }

    let model_at = |c: CouplingSet| EffectiveModel {
        couplings: c,
        kernel,
        sites: config.trotter_sites,
    };

    if config.warmup_sweeps > 0 {
        let start = model_at(schedule_at(0, &schedule)?);
        for _ in 0..config.warmup_sweeps {
            sweep(&mut field, &start, config.sweep_order, &mut rng)?;
        }
    }

    let mut acceptance = config.record_acceptance.then(|| Vec::with_capacity(config.ta as usize));
    for couplings in schedule.iter() {
        let stats = sweep(&mut field, &model_at(couplings?), config.sweep_order, &mut rng)?;
        if let Some(acc) = acceptance.as_mut() {
            acc.push(stats.accepted);
        }
    }

    Ok(ReplicaResult {
        final_field: field,
        acceptance,
        seed: config.seed,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn frozen(j: f64, g: f64, alpha: f64, p: usize) -> (CouplingSet, BathKernel) {
        (
            CouplingSet::from_trotter(j, g, 1.0, alpha).unwrap(),
            BathKernel::build(p, alpha, 1.0).unwrap(),
        )
    }

    #[test]
    fn downhill_always_accepted() {
        let (c, k) = frozen(1.0, 0.5, 0.0, 4);
        let m = EffectiveModel::new(c, &k);
        let mut f = SpinField::new_all_up(3, 4).unwrap();
        f.apply_flip(1, 2, &k).unwrap();
        // Flipping the lone down spin back lowers the energy.
        assert!(metropolis_attempt(&mut f, 1, 2, &m, 0.999_999).unwrap());
        assert_eq!(f.get(1, 2), 1);
    }

    #[test]
    fn huge_uphill_rejected() {
        let (c, k) = frozen(0.0, 50.0, 0.0, 4);
        let m = EffectiveModel::new(c, &k);
        let mut f = SpinField::new_all_up(2, 4).unwrap();
        assert!(!metropolis_attempt(&mut f, 0, 0, &m, 1e-30).unwrap());
        assert_eq!(f.get(0, 0), 1);
    }

    #[test]
    fn sweep_attempt_budget() {
        let (c, k) = frozen(0.5, 0.4, 0.0, 16);
        let m = EffectiveModel::new(c, &k);
        let mut rng = rng_from_seed(9);
        let mut f = SpinField::new_random(4, 16, &mut rng).unwrap();
        let stats = sweep(&mut f, &m, SweepOrder::Random, &mut rng).unwrap();
        assert_eq!(stats.attempts, 64);
        assert!(stats.accepted <= 64);
    }

    #[test]
    fn same_seed_same_acceptance_sequence() {
        let mut cfg = AnnealConfig::new(8, 40, 1234);
        cfg.record_acceptance = true;
        let a = anneal_run(&cfg).unwrap();
        let b = anneal_run(&cfg).unwrap();
        assert_eq!(a.acceptance, b.acceptance);
        assert_eq!(a.final_field.spins(), b.final_field.spins());
        cfg.seed += 1;
        let c = anneal_run(&cfg).unwrap();
        assert_ne!(a.final_field.spins(), c.final_field.spins());
    }

    #[test]
    fn tabulated_and_general_paths_agree_bitwise() {
        for order in [SweepOrder::Random, SweepOrder::Sequential] {
            for sites in [TrotterSites::All, TrotterSites::ExcludeLast] {
                let mut closed = AnnealConfig::new(6, 50, 77);
                closed.sweep_order = order;
                closed.trotter_sites = sites;
                closed.record_acceptance = true;
                let mut open = closed.clone();
                open.alpha = 0.6;
                let zero = BathKernel::zero(closed.p).unwrap();
                let a = anneal_run(&closed).unwrap();
                let b = anneal_with_kernel(&open, &zero).unwrap();
                assert!(b.final_field.has_bath_cache());
                assert_eq!(a.final_field.spins(), b.final_field.spins());
                assert_eq!(a.acceptance, b.acceptance);
            }
        }
    }

    #[test]
    fn bath_cache_stays_coherent_through_annealing() {
        let mut cfg = AnnealConfig::new(5, 30, 4);
        cfg.alpha = 0.8;
        let kernel = BathKernel::build(cfg.p, cfg.alpha, cfg.beta_eff).unwrap();
        let r = anneal_run(&cfg).unwrap();
        let fresh = r.final_field.bath_field_from_scratch(&kernel);
        let cached = r.final_field.bath_field().unwrap();
        for (a, b) in fresh.iter().zip(cached) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn warmup_changes_the_trajectory() {
        let base = AnnealConfig::new(6, 10, 3);
        let mut warm = base.clone();
        warm.warmup_sweeps = 5;
        let a = anneal_run(&base).unwrap();
        let b = anneal_run(&warm).unwrap();
        assert_ne!(a.final_field.spins(), b.final_field.spins());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = AnnealConfig::new(4, 0, 0);
        assert!(anneal_run(&cfg).is_err());
        cfg.ta = 4;
        cfg.beta_eff = 0.0;
        assert!(anneal_run(&cfg).is_err());
        cfg.beta_eff = 1.0;
        cfg.p = 1;
        assert!(anneal_run(&cfg).is_err());
    }

    #[test]
    fn trotter_alignment_grows_under_strong_coupling() {
        // J = 0 and a large Trotter coupling: the fraction of aligned
        // imaginary-time bonds should not drop when starting from random
        // spins, averaged over seeds.
        let (c, k) = frozen(0.0, 3.0, 0.0, 16);
        let m = EffectiveModel::new(c, &k);
        let aligned = |f: &SpinField| {
            let mut n = 0;
            for i in 0..f.l() {
                let row = f.row(i);
                for tau in 0..f.p() {
                    n += usize::from(row[tau] == row[(tau + 1) % f.p()]);
                }
            }
            n as f64 / (f.l() * f.p()) as f64
        };
        let mut means = [0.0; 4];
        for seed in 0..100 {
            let mut rng = rng_from_seed(seed);
            let mut f = SpinField::new_random(4, 16, &mut rng).unwrap();
            means[0] += aligned(&f) / 100.0;
            for m_i in means.iter_mut().skip(1) {
                sweep(&mut f, &m, SweepOrder::Random, &mut rng).unwrap();
                *m_i += aligned(&f) / 100.0;
            }
        }
        for w in means.windows(2) {
            assert!(w[1] >= w[0] - 0.01, "{means:?}");
        }
        assert!(means[3] > means[0] + 0.2, "{means:?}");
    }
}
