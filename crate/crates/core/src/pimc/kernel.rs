use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Long-range imaginary-time interaction induced by an Ohmic bath,
///
/// ```text
/// K(d) = alpha / (2 beta_eff) * (pi/P)^2 / sin^2(pi d / P),   d = 1..P-1
/// ```
///
/// The table is stored periodically with `K(0) = 0`, so `table[(t - t') mod P]`
/// is the coupling between slices `t` and `t'`.
#[derive(Debug, Clone, PartialEq)]
pub struct BathKernel {
    p: usize,
    alpha: f64,
    beta_eff: f64,
    table: Vec<f64>,
    zero: bool,
}

impl BathKernel {
    pub fn build(p: usize, alpha: f64, beta_eff: f64) -> Result<Self> {
        if p < 2 {
            return Err(Error::invalid(format!("P must be >= 2, got {p}")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        if !(beta_eff > 0.0 && beta_eff.is_finite()) {
            return Err(Error::invalid(format!("beta_eff must be > 0, got {beta_eff}")));
        }
        let mut table = vec![0.0; p];
        if alpha > 0.0 {
            let prefactor = alpha / (2.0 * beta_eff) * (PI / p as f64).powi(2);
            for (d, k) in table.iter_mut().enumerate().skip(1) {
                // sin(pi (P-d)/P) = sin(pi d/P); evaluate on the short side so
                // that the table is symmetric to the last bit.
                let short = d.min(p - d);
                *k = prefactor / (PI * short as f64 / p as f64).sin().powi(2);
            }
        }
        Ok(BathKernel {
            p,
            alpha,
            beta_eff,
            table,
            zero: alpha == 0.0,
        })
    }

    /// A kernel of the given size with every entry zero.
    pub fn zero(p: usize) -> Result<Self> {
        Self::build(p, 0.0, 1.0)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta_eff(&self) -> f64 {
        self.beta_eff
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// `K(d)` for a slice separation `d` in `0..P` (`K(0) = 0`).
    #[inline]
    pub fn get(&self, d: usize) -> f64 {
        self.table[d]
    }

    /// Periodic table of length `P`, entry 0 being zero.
    #[inline]
    pub fn periodic(&self) -> &[f64] {
        &self.table
    }
}
