//! Brute-force Boltzmann distribution of the effective model for tiny lattices.
//!
//! The energy here is deliberately evaluated without any of the machinery in
//! [`crate::pimc`]: the kernel is recomputed from its closed form and every
//! sum is written out naively, so the two implementations cannot share a bug.

use std::f64::consts::PI;

use crate::anneal::{sweep, SweepOrder};
use crate::analysis::l1_distance;
use crate::error::{Error, Result};
use crate::pimc::{BathKernel, CouplingSet, EffectiveModel, SpinField, TrotterSites};
use crate::rng::rng_from_seed;

/// Largest `L * P` accepted for full enumeration.
pub const MAX_ENUMERATION_SPINS: usize = 24;

/// Exact equilibrium distribution over all `2^(L*P)` configurations.
///
/// Configuration `c` assigns `S_i(tau) = +1` iff bit `i * P + tau` of `c` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    pub l: usize,
    pub p: usize,
    pub couplings: CouplingSet,
    pub sites: TrotterSites,
    pub probs: Vec<f64>,
    /// Marginal of the per-slice defect count, averaged over slices.
    pub defect_pmf: Vec<f64>,
    /// Partition function relative to the lowest-energy configuration.
    pub z: f64,
}

fn spin(config: usize, l_p_index: usize) -> f64 {
    if config >> l_p_index & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Effective energy of configuration `config`, evaluated term by term.
pub fn naive_energy(l: usize, p: usize, c: &CouplingSet, sites: TrotterSites, config: usize) -> f64 {
    let s = |i: usize, tau: usize| spin(config, i * p + tau);
    let time_sites = match sites {
        TrotterSites::All => l,
        TrotterSites::ExcludeLast => l - 1,
    };

    let mut spatial = 0.0;
    for i in 0..l - 1 {
        for tau in 0..p {
            spatial += s(i, tau) * s(i + 1, tau);
        }
    }
    let mut trotter = 0.0;
    for i in 0..time_sites {
        for tau in 0..p {
            trotter += s(i, tau) * s(i, (tau + 1) % p);
        }
    }
    let mut bath = 0.0;
    if c.alpha > 0.0 {
        for i in 0..time_sites {
            for tau in 0..p {
                for tau2 in 0..tau {
                    let arg = PI * (tau - tau2) as f64 / p as f64;
                    let k = c.alpha / (2.0 * c.beta_eff) * (PI / p as f64).powi(2) / arg.sin().powi(2);
                    bath += k * s(i, tau) * s(i, tau2);
                }
            }
        }
    }
    -c.j * spatial - c.trotter / c.beta_eff * trotter - bath
}

/// Exact weights `exp(-beta_eff * H_eff)`, normalized.
pub fn enumerate_boltzmann(
    l: usize,
    p: usize,
    couplings: &CouplingSet,
    sites: TrotterSites,
) -> Result<ExactDistribution> {
    if l < 2 || p < 2 {
        return Err(Error::invalid(format!("need L >= 2 and P >= 2, got L = {l}, P = {p}")));
    }
    let spins = l * p;
    if spins > MAX_ENUMERATION_SPINS {
        return Err(Error::EnumerationTooLarge {
            spins,
            cap: MAX_ENUMERATION_SPINS,
        });
    }
    let energies: Vec<f64> = (0..1usize << spins)
        .map(|c| naive_energy(l, p, couplings, sites, c))
        .collect();
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut probs: Vec<f64> = energies
        .iter()
        .map(|e| (-couplings.beta_eff * (e - e_min)).exp())
        .collect();
    let z: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|w| *w /= z);

    let mut defect_pmf = vec![0.0; l];
    for (config, w) in probs.iter().enumerate() {
        for tau in 0..p {
            let n = (0..l - 1)
                .filter(|&i| spin(config, i * p + tau) != spin(config, (i + 1) * p + tau))
                .count();
            defect_pmf[n] += w / p as f64;
        }
    }

    Ok(ExactDistribution {
        l,
        p,
        couplings: *couplings,
        sites,
        probs,
        defect_pmf,
        z,
    })
}

/// Index of `field` in the enumeration order of [`ExactDistribution`].
pub fn config_index(field: &SpinField) -> usize {
    field
        .spins()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0)
        .fold(0, |acc, (k, _)| acc | 1 << k)
}

/// Runs Metropolis sweeps at the frozen couplings of `exact`, recording the
/// configuration after each sweep, and returns the L1 distance between the
/// empirical and exact configuration distributions.
pub fn compare_mcmc_to_exact(exact: &ExactDistribution, sweeps: u64, seed: u64) -> Result<f64> {
    if sweeps == 0 {
        return Err(Error::invalid("need at least one sweep"));
    }
    let c = &exact.couplings;
    let kernel = BathKernel::build(exact.p, c.alpha, c.beta_eff)?;
    let model = EffectiveModel::new(*c, &kernel).with_sites(exact.sites);
    let mut rng = rng_from_seed(seed);
    let mut field = SpinField::new_random(exact.l, exact.p, &mut rng)?;
    if !kernel.is_zero() {
        field.enable_bath_cache(&kernel)?;
    }
    let mut counts = vec![0u64; exact.probs.len()];
    for _ in 0..sweeps {
        sweep(&mut field, &model, SweepOrder::Random, &mut rng)?;
        counts[config_index(&field)] += 1;
    }
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / sweeps as f64).collect();
    Ok(l1_distance(&empirical, &exact.probs))
}
