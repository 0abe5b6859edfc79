//! Reference values from Kibble-Zurek theory, stored for comparison only.

/// `d nu / (1 + z nu)`, the Kibble-Zurek exponent of the defect density.
pub fn kz_exponent(dimension: f64, z: f64, nu: f64) -> f64 {
    dimension * nu / (1.0 + z * nu)
}

/// Transverse-field Ising chain: `z = nu = 1`.
pub const CLOSED_Z: f64 = 1.0;
pub const CLOSED_NU: f64 = 1.0;

/// Equilibrium exponents of the Ohmic-dissipative chain (Werner et al. 2005).
pub const OPEN_Z: f64 = 1.985;
pub const OPEN_NU: f64 = 0.638;

/// Generalized Kibble-Zurek cumulant ratios for the closed chain.
pub const CLOSED_K2_OVER_K1: f64 = 0.578;
pub const CLOSED_K3_OVER_K1: f64 = 0.134;
/// Third-cumulant ratio quoted for comparison with the dissipative chain.
pub const OPEN_K3_OVER_K1: f64 = 0.174;
