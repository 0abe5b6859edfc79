use serde::{Deserialize, Serialize};

use super::field::SpinField;
use super::kernel::BathKernel;
use super::schedule::CouplingSet;
use crate::error::Result;

/// Sites that carry the imaginary-time (Trotter and bath) couplings.
///
/// The transverse field and the bath act on all `L` sites, which is the
/// default. `ExcludeLast` drops site `L - 1` from both imaginary-time terms,
/// reproducing a lattice whose Trotter and bath sums stop at `L - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrotterSites {
    #[default]
    All,
    ExcludeLast,
}

impl TrotterSites {
    #[inline]
    pub fn count(self, l: usize) -> usize {
        match self {
            TrotterSites::All => l,
            TrotterSites::ExcludeLast => l - 1,
        }
    }
}

/// `H_eff` at fixed couplings.
#[derive(Debug, Clone, Copy)]
pub struct EffectiveModel<'k> {
    pub couplings: CouplingSet,
    pub kernel: &'k BathKernel,
    pub sites: TrotterSites,
}

/// Energy change of flipping a spin `s` whose spatial neighbours sum to
/// `spatial`, imaginary-time neighbours sum to `trotter` and whose bath field
/// is `bath`. Both Monte Carlo paths go through this to stay bit-identical.
#[inline(always)]
pub(crate) fn local_delta(s: f64, spatial: f64, trotter: f64, bath: f64, j: f64, g: f64) -> f64 {
    2.0 * s * (j * spatial + g * trotter + bath)
}

impl<'k> EffectiveModel<'k> {
    pub fn new(couplings: CouplingSet, kernel: &'k BathKernel) -> Self {
        EffectiveModel {
            couplings,
            kernel,
            sites: TrotterSites::All,
        }
    }

    pub fn with_sites(mut self, sites: TrotterSites) -> Self {
        self.sites = sites;
        self
    }

    /// Coefficient of `S_i(tau) S_i(tau+1)` in the energy, `gamma / beta_eff`.
    #[inline]
    pub fn trotter_weight(&self) -> f64 {
        self.couplings.trotter / self.couplings.beta_eff
    }

    fn check(&self, field: &SpinField) -> Result<()> {
        field.check_kernel(self.kernel)
    }

    /// Full three-term `H_eff`.
    pub fn total_energy(&self, field: &SpinField) -> Result<f64> {
        self.check(field)?;
        let (l, p) = (field.l(), field.p());
        let j = self.couplings.j;
        let g = self.trotter_weight();

        let mut spatial = 0.0;
        for i in 0..l - 1 {
            let (a, b) = (field.row(i), field.row(i + 1));
            spatial += a.iter().zip(b).map(|(&x, &y)| f64::from(x * y)).sum::<f64>();
        }

        let mut trotter = 0.0;
        let mut bath = 0.0;
        for i in 0..self.sites.count(l) {
            let row = field.row(i);
            for tau in 0..p {
                trotter += f64::from(row[tau] * row[(tau + 1) % p]);
            }
            if !self.kernel.is_zero() {
                for tau in 0..p {
                    for other in 0..tau {
                        bath += self.kernel.get(tau - other) * f64::from(row[tau] * row[other]);
                    }
                }
            }
        }

        Ok(-j * spatial - g * trotter - bath)
    }

    /// `H_eff(after) - H_eff(before)` for flipping `S_i(tau)`; the field is
    /// not modified. `O(1)` with a bath cache, `O(P)` without.
    pub fn delta_energy(&self, field: &SpinField, i: usize, tau: usize) -> Result<f64> {
        self.check(field)?;
        field.check_index(i, tau)?;
        Ok(self.delta_energy_unchecked(field, i, tau))
    }

    #[inline(always)]
    pub(crate) fn delta_energy_unchecked(&self, field: &SpinField, i: usize, tau: usize) -> f64 {
        let (l, p) = (field.l(), field.p());
        let spins = field.padded();
        let idx = (i + 1) * p + tau;
        let s = spins[idx];
        let spatial = spins[idx - p] + spins[idx + p];

        let (trotter, bath) = if i < self.sites.count(l) {
            let prev = if tau == 0 { idx + p - 1 } else { idx - 1 };
            let next = if tau + 1 == p { idx + 1 - p } else { idx + 1 };
            (
                spins[prev] + spins[next],
                field.local_bath_field(i, tau, self.kernel),
            )
        } else {
            (0, 0.0)
        };

        local_delta(
            f64::from(s),
            f64::from(spatial),
            f64::from(trotter),
            bath,
            self.couplings.j,
            self.trotter_weight(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn model_parts(j: f64, g: f64, alpha: f64, p: usize) -> (CouplingSet, BathKernel) {
        let c = CouplingSet::from_trotter(j, g, 1.0, alpha).unwrap();
        let k = BathKernel::build(p, alpha, 1.0).unwrap();
        (c, k)
    }

    #[test]
    fn two_by_two_all_up() {
        // Two spatial bonds and four Trotter bonds (P = 2 wraps onto itself).
        let (c, k) = model_parts(1.0, 0.3, 0.0, 2);
        let m = EffectiveModel::new(c, &k);
        let f = SpinField::new_all_up(2, 2).unwrap();
        assert!((m.total_energy(&f).unwrap() - (-2.0 - 4.0 * 0.3)).abs() < 1e-14);
        let de = m.delta_energy(&f, 0, 0).unwrap();
        assert!((de - (2.0 + 4.0 * 0.3)).abs() < 1e-14);
    }

    #[test]
    fn delta_is_antisymmetric_under_double_flip() {
        let (c, k) = model_parts(0.7, 0.4, 0.0, 4);
        let m = EffectiveModel::new(c, &k);
        // Interior site with both spatial neighbours down.
        let mut f = SpinField::new_all_up(3, 4).unwrap();
        f.apply_flip(0, 2, &k).unwrap();
        f.apply_flip(2, 2, &k).unwrap();
        let forward = m.delta_energy(&f, 1, 2).unwrap();
        f.apply_flip(1, 2, &k).unwrap();
        let back = m.delta_energy(&f, 1, 2).unwrap();
        assert!((forward + back).abs() < 1e-14);
    }

    #[test]
    fn excluded_last_site_has_no_imaginary_time_terms() {
        let (c, k) = model_parts(0.0, 0.5, 0.6, 4);
        let m = EffectiveModel::new(c, &k).with_sites(TrotterSites::ExcludeLast);
        let f = SpinField::new_all_up(3, 4).unwrap();
        assert_eq!(m.delta_energy(&f, 2, 1).unwrap(), 0.0);
        assert!(m.delta_energy(&f, 1, 1).unwrap() > 0.0);
    }

    #[test]
    fn kernel_size_mismatch() {
        let (c, k) = model_parts(0.5, 0.5, 0.6, 8);
        let m = EffectiveModel::new(c, &k);
        let f = SpinField::new_all_up(2, 4).unwrap();
        assert!(m.total_energy(&f).is_err());
        assert!(m.delta_energy(&f, 0, 0).is_err());
    }

    #[test]
    fn zero_alpha_bath_term_vanishes() {
        let mut rng = rng_from_seed(5);
        let f = SpinField::new_random(4, 6, &mut rng).unwrap();
        let (c0, k0) = model_parts(0.0, 0.0, 0.0, 6);
        assert_eq!(EffectiveModel::new(c0, &k0).total_energy(&f).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn global_flip_symmetry(seed in any::<u64>(), l in 2usize..8, p in 2usize..10,
                                j in 0.0f64..2.0, g in 0.0f64..3.0, alpha in 0.0f64..1.5) {
            let mut rng = rng_from_seed(seed);
            let (c, k) = model_parts(j, g, alpha, p);
            let m = EffectiveModel::new(c, &k);
            let mut f = SpinField::new_random(l, p, &mut rng).unwrap();
            let before = m.total_energy(&f).unwrap();
            f.flip_all();
            let after = m.total_energy(&f).unwrap();
            prop_assert!((before - after).abs() <= 1e-12 * before.abs().max(1.0));
        }

        #[test]
        fn delta_matches_total_difference(seed in any::<u64>(), l in 2usize..9, p in 2usize..12,
                                          j in 0.0f64..2.0, g in 0.0f64..3.0, alpha in 0.0f64..1.5,
                                          cached in any::<bool>(), literal in any::<bool>()) {
            let mut rng = rng_from_seed(seed);
            let (c, k) = model_parts(j, g, alpha, p);
            let sites = if literal { TrotterSites::ExcludeLast } else { TrotterSites::All };
            let m = EffectiveModel::new(c, &k).with_sites(sites);
            let mut f = SpinField::new_random(l, p, &mut rng).unwrap();
            if cached {
                f.enable_bath_cache(&k).unwrap();
            }
            let i = (seed as usize) % l;
            let tau = ((seed >> 20) as usize) % p;
            let before = m.total_energy(&f).unwrap();
            let de = m.delta_energy(&f, i, tau).unwrap();
            f.apply_flip(i, tau, &k).unwrap();
            let after = m.total_energy(&f).unwrap();
            prop_assert!((de - (after - before)).abs() <= 1e-10 * before.abs().max(1.0));
        }
    }
}
