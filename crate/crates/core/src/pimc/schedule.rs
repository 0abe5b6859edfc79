use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Imaginary-time coupling `-1/2 ln tanh(beta_eff * transverse)`.
pub fn trotter_coupling(transverse: f64, beta_eff: f64) -> f64 {
    -0.5 * (beta_eff * transverse).tanh().ln()
}

/// Instantaneous couplings driving one unit of annealing time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSet {
    /// Spatial ferromagnetic coupling `J`.
    pub j: f64,
    /// Transverse field `Gamma`; infinite when built from a zero Trotter coupling.
    pub transverse: f64,
    /// Trotter coupling `gamma` (dimensionless, appears as `gamma / beta_eff` in the energy).
    pub trotter: f64,
    pub beta_eff: f64,
    /// Ohmic bath strength.
    pub alpha: f64,
}

impl CouplingSet {
    pub fn from_transverse(j: f64, transverse: f64, beta_eff: f64, alpha: f64) -> Result<Self> {
        if !(transverse > 0.0 && transverse.is_finite()) {
            return Err(Error::invalid(format!(
                "transverse field must be positive and finite, got {transverse}"
            )));
        }
        Self::validated(j, transverse, trotter_coupling(transverse, beta_eff), beta_eff, alpha)
    }

    /// Builds couplings directly from the Trotter coupling; `trotter = 0`
    /// corresponds to an infinite transverse field.
    pub fn from_trotter(j: f64, trotter: f64, beta_eff: f64, alpha: f64) -> Result<Self> {
        let transverse = (-2.0 * trotter).exp().atanh() / beta_eff;
        Self::validated(j, transverse, trotter, beta_eff, alpha)
    }

    fn validated(j: f64, transverse: f64, trotter: f64, beta_eff: f64, alpha: f64) -> Result<Self> {
        if !(j >= 0.0 && j.is_finite()) {
            return Err(Error::invalid(format!("J must be finite and >= 0, got {j}")));
        }
        if !(beta_eff > 0.0 && beta_eff.is_finite()) {
            return Err(Error::invalid(format!("beta_eff must be > 0, got {beta_eff}")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        if !(trotter >= 0.0 && trotter.is_finite()) {
            return Err(Error::invalid(format!(
                "Trotter coupling must be finite and >= 0, got {trotter}"
            )));
        }
        Ok(CouplingSet {
            j,
            transverse,
            trotter,
            beta_eff,
            alpha,
        })
    }
}

/// Parameters of the linear schedule `J = t/ta`, `Gamma = 1 - t/ta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    /// Annealing time in Monte Carlo sweeps.
    pub ta: u32,
    pub beta_eff: f64,
    pub alpha: f64,
}

impl ScheduleParams {
    pub fn new(ta: u32, beta_eff: f64, alpha: f64) -> Result<Self> {
        if ta == 0 {
            return Err(Error::invalid("annealing time must be at least one sweep"));
        }
        Ok(ScheduleParams { ta, beta_eff, alpha })
    }

    /// Iterates the couplings used for sweeps `t = 0, ..., ta - 1`.
    pub fn iter(&self) -> impl Iterator<Item = Result<CouplingSet>> + '_ {
        (0..self.ta).map(move |t| schedule_at(t, self))
    }
}

/// Couplings at sweep `t`. The endpoint `t = ta` is rejected: the Trotter
/// coupling diverges there, and dynamics never runs at `Gamma = 0`.
pub fn schedule_at(t: u32, params: &ScheduleParams) -> Result<CouplingSet> {
    if params.ta == 0 {
        return Err(Error::invalid("annealing time must be at least one sweep"));
    }
    if t == params.ta {
        return Err(Error::ScheduleEndpoint { ta: params.ta });
    }
    if t > params.ta {
        return Err(Error::IndexOutOfRange {
            what: "sweep",
            index: t as usize,
            limit: params.ta as usize,
        });
    }
    let s = f64::from(t) / f64::from(params.ta);
    CouplingSet::from_transverse(s, 1.0 - s, params.beta_eff, params.alpha)
}
