//! Cumulants, distribution models, L1 distances and fits.

mod cumulants;
mod fit;
mod models;
pub mod theory;

pub use cumulants::{
    bootstrap_cumulant_ratios, central_moments, cumulants, fit_cumulant_ratios, CumulantSet,
    RatioFit, BOOTSTRAP_RESAMPLES,
};
pub use fit::{
    fit_beta_bl, fit_beta_bl_pmf, fit_power_law, FitKind, FitResult, PowerLawWeighting,
    BETA_BL_MAX,
};
pub use models::{boltzmann_distribution, boltzmann_pmf, gaussian_distribution, gaussian_pmf, l1_distance};
