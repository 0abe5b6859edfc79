use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::spec::{CellKey, ExperimentSpec};
use crate::analysis::{
    bootstrap_cumulant_ratios, cumulants, fit_beta_bl, fit_power_law, gaussian_distribution, l1_distance,
    CumulantSet, FitKind, FitResult, PowerLawWeighting, RatioFit,
};
use crate::error::Result;
use crate::observables::{
    residual_energy_from_defects, DefectHistogram, HistogramMode, ResidualEnergyPoint, ResidualEnergySeries,
};
use crate::rng::mix;

/// Knobs of the per-cell analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub histogram_mode: HistogramMode,
    pub power_law_window: [u32; 2],
    pub power_law_weighting: PowerLawWeighting,
    pub ratio_window: [u32; 2],
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl AnalysisOptions {
    pub fn from_spec(spec: &ExperimentSpec) -> Self {
        AnalysisOptions {
            histogram_mode: spec.histogram_mode,
            power_law_window: spec.power_law_window,
            power_law_weighting: spec.power_law_weighting,
            ratio_window: spec.ratio_window,
            bootstrap_resamples: spec.bootstrap_resamples,
            seed: spec.master_seed,
        }
    }
}

/// Raw per-slice kink counts of one cell: `times[ta][replica][slice]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellData {
    pub cell: CellKey,
    pub times: BTreeMap<u32, Vec<Vec<u32>>>,
}

impl CellData {
    pub fn histogram(&self, ta: u32, mode: HistogramMode) -> Option<Result<DefectHistogram>> {
        self.times
            .get(&ta)
            .map(|reps| DefectHistogram::from_replica_slices(self.cell.l, reps, mode))
    }

    pub fn residual_point(&self, ta: u32) -> Option<Result<ResidualEnergyPoint>> {
        self.times.get(&ta).map(|reps| {
            let e: Vec<f64> = reps
                .iter()
                .map(|slices| residual_energy_from_defects(self.cell.l, slices))
                .collect();
            ResidualEnergyPoint::from_samples(ta, &e)
        })
    }

    pub fn residual_series(&self) -> Result<ResidualEnergySeries> {
        let points = self
            .times
            .keys()
            .filter_map(|&ta| self.residual_point(ta))
            .collect::<Result<Vec<_>>>()?;
        Ok(ResidualEnergySeries::new(points))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub ta: u32,
    pub e_res: ResidualEnergyPoint,
    /// Absent with fewer than two observations.
    pub cumulants: Option<CumulantSet>,
    /// Gaussian with the measured `k1`, `k2`; absent when `k2 = 0`.
    pub gaussian: Option<FitResult>,
    pub boltzmann: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: CellKey,
    pub options: AnalysisOptions,
    pub points: Vec<PointSummary>,
    pub power_law: Option<FitResult>,
    /// Why the power law could not be fitted.
    pub power_law_error: Option<String>,
    pub cumulant_ratios: Option<RatioFit>,
    pub ratio_error: Option<String>,
}

/// Gaussian model with the given cumulants scored against an empirical pmf.
pub fn gaussian_fit(hist: &DefectHistogram, k1: f64, k2: f64) -> Result<FitResult> {
    let l = hist.l();
    let q = gaussian_distribution(l, k1, k2)?;
    Ok(FitResult {
        kind: FitKind::Gaussian,
        params: BTreeMap::from([("k1".to_string(), k1), ("k2".to_string(), k2)]),
        stderr: None,
        window: [0.0, (l - 1) as f64],
        metric: BTreeMap::from([("l1".to_string(), l1_distance(&q, &hist.pmf()))]),
        n_points: l,
        at_bound: false,
    })
}

fn point_summary(data: &CellData, ta: u32, opts: &AnalysisOptions) -> Result<PointSummary> {
    let hist = data.histogram(ta, opts.histogram_mode).expect("ta present")?;
    let e_res = data.residual_point(ta).expect("ta present")?;
    let cum = if hist.total() >= 2 {
        Some(cumulants(&hist, opts.bootstrap_resamples, mix(opts.seed, u64::from(ta)))?)
    } else {
        None
    };
    let gaussian = match cum {
        Some(c) if c.k2 > 0.0 => Some(gaussian_fit(&hist, c.k1, c.k2)?),
        _ => None,
    };
    Ok(PointSummary {
        ta,
        e_res,
        cumulants: cum,
        gaussian,
        boltzmann: fit_beta_bl(&hist)?,
    })
}

/// Everything in a cell summary, computed from the raw kink counts alone.
pub fn analyze_cell(data: &CellData, opts: &AnalysisOptions) -> Result<CellSummary> {
    let points = data
        .times
        .keys()
        .map(|&ta| point_summary(data, ta, opts))
        .collect::<Result<Vec<_>>>()?;

    let (power_law, power_law_error) = match data
        .residual_series()
        .and_then(|s| fit_power_law(&s, opts.power_law_window, opts.power_law_weighting))
    {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let [lo, hi] = opts.ratio_window;
    let window_hists = data
        .times
        .range(lo..=hi)
        .map(|(&ta, _)| data.histogram(ta, opts.histogram_mode).expect("ta present"))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&DefectHistogram> = window_hists.iter().collect();
    let seed = mix(opts.seed, (u64::from(lo) << 32) | u64::from(hi));
    let (cumulant_ratios, ratio_error) = match bootstrap_cumulant_ratios(&refs, opts.bootstrap_resamples, seed) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };

    Ok(CellSummary {
        cell: data.cell,
        options: *opts,
        points,
        power_law,
        power_law_error,
        cumulant_ratios,
        ratio_error,
    })
}
