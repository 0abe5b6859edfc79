use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::models::{boltzmann_distribution, l1_distance};
use crate::error::{Error, Result};
use crate::observables::{DefectHistogram, ResidualEnergySeries};

/// Upper end of the `beta_BL` search interval.
pub const BETA_BL_MAX: f64 = 10.0;
const BETA_BL_GRID_STEP: f64 = 0.01;
const BETA_BL_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    PowerLaw,
    Boltzmann,
    Gaussian,
}

/// A fitted model in the on-disk JSON shape
/// `{kind, params, stderr, window, metric, n_points}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: FitKind,
    pub params: BTreeMap<String, f64>,
    /// Standard error of the primary parameter, when one is defined.
    pub stderr: Option<f64>,
    /// Fit window (annealing times) or search interval (`beta_BL`).
    pub window: [f64; 2],
    /// Goodness of fit: `r_squared` for power laws, `l1` for distributions.
    pub metric: BTreeMap<String, f64>,
    pub n_points: usize,
    /// The optimum sits on the edge of the search interval.
    #[serde(default)]
    pub at_bound: bool,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metric.get(name).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerLawWeighting {
    #[default]
    Unweighted,
    /// Weights `(mean / stderr)^2`, the inverse variance of `ln E_res`.
    InverseVariance,
}

/// Least-squares fit of `ln E_res = c - b ln ta` over `window[0] <= ta <= window[1]`.
pub fn fit_power_law(
    series: &ResidualEnergySeries,
    window: [u32; 2],
    weighting: PowerLawWeighting,
) -> Result<FitResult> {
    let pts: Vec<_> = series
        .points
        .iter()
        .filter(|p| p.ta >= window[0] && p.ta <= window[1])
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs 3 points in [{}, {}], found {}",
            window[0],
            window[1],
            pts.len()
        )));
    }
    if let Some(bad) = pts.iter().find(|p| !(p.mean > 0.0)) {
        return Err(Error::invalid(format!(
            "residual energy must be positive for a log-log fit (ta = {}, E_res = {})",
            bad.ta, bad.mean
        )));
    }
    let x: Vec<f64> = pts.iter().map(|p| f64::from(p.ta).ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.mean.ln()).collect();
    let w: Vec<f64> = match weighting {
        PowerLawWeighting::Unweighted => vec![1.0; pts.len()],
        PowerLawWeighting::InverseVariance => pts
            .iter()
            .map(|p| match p.stderr {
                Some(se) if se > 0.0 => Ok((p.mean / se).powi(2)),
                _ => Err(Error::InsufficientData(format!(
                    "inverse-variance weighting needs a positive standard error at ta = {}",
                    p.ta
                ))),
            })
            .collect::<Result<_>>()?,
    };

    let wsum: f64 = w.iter().sum();
    let xbar = x.iter().zip(&w).map(|(x, w)| w * x).sum::<f64>() / wsum;
    let ybar = y.iter().zip(&w).map(|(y, w)| w * y).sum::<f64>() / wsum;
    let sxx: f64 = x.iter().zip(&w).map(|(x, w)| w * (x - xbar).powi(2)).sum();
    let sxy: f64 = x
        .iter()
        .zip(&y)
        .zip(&w)
        .map(|((x, y), w)| w * (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let rss: f64 = x
        .iter()
        .zip(&y)
        .zip(&w)
        .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
        .sum();
    let tss: f64 = y.iter().zip(&w).map(|(y, w)| w * (y - ybar).powi(2)).sum();
    let stderr = (rss / (pts.len() as f64 - 2.0) / sxx).sqrt();

    Ok(FitResult {
        kind: FitKind::PowerLaw,
        params: BTreeMap::from([("b".to_string(), -slope), ("log_prefactor".to_string(), intercept)]),
        stderr: Some(stderr),
        window: [f64::from(window[0]), f64::from(window[1])],
        metric: BTreeMap::from([(
            "r_squared".to_string(),
            if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
        )]),
        n_points: pts.len(),
        at_bound: false,
    })
}

/// [`fit_beta_bl_pmf`] on the empirical pmf of a histogram.
pub fn fit_beta_bl(hist: &DefectHistogram) -> Result<FitResult> {
    if hist.total() == 0 {
        return Err(Error::InsufficientData("empty histogram".into()));
    }
    fit_beta_bl_pmf(&hist.pmf())
}

/// `beta_BL >= 0` minimizing the L1 distance between the Boltzmann defect
/// model and `empirical` (support `0..L`): a grid on `[0, 10]` with step 0.01,
/// then golden-section refinement around the best grid point.
pub fn fit_beta_bl_pmf(empirical: &[f64]) -> Result<FitResult> {
    let l = empirical.len();
    let objective = |beta: f64| -> Result<f64> { Ok(l1_distance(&boltzmann_distribution(l, beta)?, empirical)) };

    let steps = (BETA_BL_MAX / BETA_BL_GRID_STEP).round() as usize;
    let mut best = (0usize, f64::INFINITY);
    for k in 0..=steps {
        let v = objective(k as f64 * BETA_BL_GRID_STEP)?;
        if v < best.1 {
            best = (k, v);
        }
    }
    let grid_beta = best.0 as f64 * BETA_BL_GRID_STEP;

    // Golden section on the bracket around the grid minimum.
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = (grid_beta - BETA_BL_GRID_STEP).max(0.0);
    let mut b = (grid_beta + BETA_BL_GRID_STEP).min(BETA_BL_MAX);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c)?, objective(d)?);
    while b - a > BETA_BL_TOLERANCE {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d)?;
        }
    }
    let refined = 0.5 * (a + b);
    let refined_l1 = objective(refined)?;
    let (beta, l1) = if refined_l1 < best.1 { (refined, refined_l1) } else { (grid_beta, best.1) };

    Ok(FitResult {
        kind: FitKind::Boltzmann,
        params: BTreeMap::from([("beta_bl".to_string(), beta)]),
        stderr: None,
        window: [0.0, BETA_BL_MAX],
        metric: BTreeMap::from([("l1".to_string(), l1)]),
        n_points: l,
        at_bound: best.0 == steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::ResidualEnergyPoint;
    use proptest::prelude::*;

    fn series(points: &[(u32, f64)]) -> ResidualEnergySeries {
        ResidualEnergySeries::new(
            points
                .iter()
                .map(|&(ta, m)| ResidualEnergyPoint {
                    ta,
                    mean: m,
                    stderr: Some(0.05 * m),
                    n_samples: 100,
                })
                .collect(),
        )
    }

    #[test]
    fn exact_power_law() {
        let s = series(&(4..14).map(|k| (1u32 << k, 3.0 * f64::from(1u32 << k).powf(-0.5))).collect::<Vec<_>>());
        for weighting in [PowerLawWeighting::Unweighted, PowerLawWeighting::InverseVariance] {
            let f = fit_power_law(&s, [16, 8192], weighting).unwrap();
            assert!((f.param("b").unwrap() - 0.5).abs() < 1e-10);
            assert!(f.stderr.unwrap() < 1e-10);
            assert_eq!(f.n_points, 10);
        }
    }

    #[test]
    fn window_selects_points() {
        let s = series(&[(8, 1.0), (16, 0.5), (32, 0.25), (64, 0.125), (128, 0.1)]);
        let f = fit_power_law(&s, [16, 64], PowerLawWeighting::Unweighted).unwrap();
        assert_eq!(f.n_points, 3);
        assert!((f.param("b").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_errors() {
        let s = series(&[(16, 0.5), (32, 0.25)]);
        assert!(fit_power_law(&s, [1, 100], PowerLawWeighting::Unweighted).is_err());
        let s = series(&[(16, 0.5), (32, 0.0), (64, 0.1)]);
        assert!(fit_power_law(&s, [1, 100], PowerLawWeighting::Unweighted).is_err());
        let mut s = series(&[(16, 0.5), (32, 0.3), (64, 0.1)]);
        s.points[1].stderr = None;
        assert!(fit_power_law(&s, [1, 100], PowerLawWeighting::InverseVariance).is_err());
        assert!(fit_power_law(&s, [1, 100], PowerLawWeighting::Unweighted).is_ok());
    }

    #[test]
    fn beta_round_trip() {
        let pmf = boltzmann_distribution(64, 1.7).unwrap();
        let f = fit_beta_bl_pmf(&pmf).unwrap();
        assert!((f.param("beta_bl").unwrap() - 1.7).abs() < 1e-3);
        assert!(f.metric("l1").unwrap() < 1e-6);
        assert!(!f.at_bound);
    }

    #[test]
    fn delta_at_zero_hits_upper_bound() {
        let mut pmf = vec![0.0; 32];
        pmf[0] = 1.0;
        let f = fit_beta_bl_pmf(&pmf).unwrap();
        assert!(f.at_bound);
        assert!(f.param("beta_bl").unwrap() > BETA_BL_MAX - 0.02);
    }

    #[test]
    fn more_defects_means_lower_beta() {
        let mut last = f64::INFINITY;
        for beta in [2.5, 1.8, 1.2, 0.7, 0.3] {
            let pmf = boltzmann_distribution(48, beta).unwrap();
            let k1: f64 = pmf.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
            let fitted = fit_beta_bl_pmf(&pmf).unwrap().param("beta_bl").unwrap();
            assert!(fitted < last, "k1 = {k1}");
            last = fitted;
        }
    }

    #[test]
    fn fit_result_json_shape() {
        let f = fit_beta_bl_pmf(&boltzmann_distribution(8, 1.0).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&f).unwrap();
        for key in ["kind", "params", "stderr", "window", "metric", "n_points"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["kind"], "boltzmann");
        let back: FitResult = serde_json::from_value(v).unwrap();
        assert_eq!(back, f);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn beta_round_trip_random(l in 8usize..200, beta in 0.05f64..4.0) {
            let pmf = boltzmann_distribution(l, beta).unwrap();
            let f = fit_beta_bl_pmf(&pmf).unwrap();
            prop_assert!((f.param("beta_bl").unwrap() - beta).abs() < 1e-3);
        }

        #[test]
        fn power_law_scale_equivariant(scale in 1e-3f64..1e3, noise in proptest::collection::vec(-0.1f64..0.1, 8)) {
            let base: Vec<(u32, f64)> = noise.iter().enumerate()
                .map(|(k, e)| (16u32 << k, f64::from(16u32 << k).powf(-0.45) * (1.0 + e)))
                .collect();
            let scaled: Vec<(u32, f64)> = base.iter().map(|&(t, m)| (t, m * scale)).collect();
            let a = fit_power_law(&series(&base), [16, 8192], PowerLawWeighting::Unweighted).unwrap();
            let b = fit_power_law(&series(&scaled), [16, 8192], PowerLawWeighting::Unweighted).unwrap();
            prop_assert!((a.param("b").unwrap() - b.param("b").unwrap()).abs() < 1e-12);
        }
    }
}
