use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::DefectHistogram;
use crate::rng::{mix, rng_from_seed, ReplicaRng};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// First three cumulants of a defect distribution. Up to third order the
/// cumulants coincide with the central moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantSet {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// Bootstrap standard deviations of `(k1, k2, k3)`.
    pub errors: Option<[f64; 3]>,
    pub observations: u64,
    /// Independent resampling units (replicas); 0 when observations were
    /// resampled individually.
    pub replicas: usize,
}

/// Mean, second and third central moments of a count vector indexed by `n`.
pub fn central_moments(counts: &[u64]) -> Option<(f64, f64, f64)> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return None;
    }
    let total = total as f64;
    let mean = counts
        .iter()
        .enumerate()
        .map(|(n, &c)| n as f64 * c as f64)
        .sum::<f64>()
        / total;
    let (mut m2, mut m3) = (0.0, 0.0);
    for (n, &c) in counts.iter().enumerate() {
        if c > 0 {
            let d = n as f64 - mean;
            m2 += c as f64 * d * d;
            m3 += c as f64 * d * d * d;
        }
    }
    Some((mean, m2 / total, m3 / total))
}

/// Draws one bootstrap replicate of `hist` into `out`: whole replicas when
/// the histogram has at least two, single observations otherwise.
fn resample_into(hist: &DefectHistogram, rng: &mut ReplicaRng, out: &mut [u64]) {
    out.iter_mut().for_each(|c| *c = 0);
    let blocks = hist.blocks();
    if blocks.len() >= 2 {
        for _ in 0..blocks.len() {
            let b = &blocks[rng.random_range(0..blocks.len())];
            for (o, c) in out.iter_mut().zip(b) {
                *o += c;
            }
        }
    } else {
        // Inverse-CDF draws from the pooled counts.
        let cdf: Vec<u64> = hist
            .counts()
            .iter()
            .scan(0, |acc, &c| {
                *acc += c;
                Some(*acc)
            })
            .collect();
        let total = hist.total();
        for _ in 0..total {
            let x = rng.random_range(0..total);
            out[cdf.partition_point(|&c| c <= x)] += 1;
        }
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Pooled cumulants with bootstrap errors from `resamples` replicates
/// (no errors when `resamples < 2`).
pub fn cumulants(hist: &DefectHistogram, resamples: usize, seed: u64) -> Result<CumulantSet> {
    if hist.total() < 2 {
        return Err(Error::InsufficientData(format!(
            "cumulants need at least 2 observations, histogram has {}",
            hist.total()
        )));
    }
    let (k1, k2, k3) = central_moments(hist.counts()).expect("nonempty histogram");
    let errors = (resamples >= 2).then(|| {
        let mut rng = rng_from_seed(seed);
        let mut buf = vec![0u64; hist.counts().len()];
        let mut draws = [
            Vec::with_capacity(resamples),
            Vec::with_capacity(resamples),
            Vec::with_capacity(resamples),
        ];
        for _ in 0..resamples {
            resample_into(hist, &mut rng, &mut buf);
            let (a, b, c) = central_moments(&buf).expect("resample keeps the total");
            draws[0].push(a);
            draws[1].push(b);
            draws[2].push(c);
        }
        [std_dev(&draws[0]), std_dev(&draws[1]), std_dev(&draws[2])]
    });
    let blocks = hist.blocks().len();
    Ok(CumulantSet {
        k1,
        k2: k2.max(0.0),
        k3,
        errors,
        observations: hist.total(),
        replicas: if blocks >= 2 { blocks } else { 0 },
    })
}

/// Zero-intercept proportionality of `k2` and `k3` to `k1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioFit {
    pub k2_over_k1: f64,
    pub k3_over_k1: f64,
    pub k2_err: f64,
    pub k3_err: f64,
    /// Weighted, mean-centred coefficient of determination of each fit.
    pub r_squared_k2: f64,
    pub r_squared_k3: f64,
    pub n_points: usize,
    /// `true` when the errors come from a replica bootstrap rather than the
    /// regression covariance.
    pub bootstrap_errors: bool,
}

struct ThroughOrigin {
    slope: f64,
    stderr: f64,
    r_squared: f64,
}

fn fit_through_origin(x: &[f64], y: &[f64], w: &[f64]) -> ThroughOrigin {
    let sxx: f64 = x.iter().zip(w).map(|(x, w)| w * x * x).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((x, y), w)| w * x * y).sum();
    let slope = sxy / sxx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((x, y), w)| w * (y - slope * x).powi(2))
        .sum();
    let wsum: f64 = w.iter().sum();
    let ybar = y.iter().zip(w).map(|(y, w)| w * y).sum::<f64>() / wsum;
    let tss: f64 = y.iter().zip(w).map(|(y, w)| w * (y - ybar).powi(2)).sum();
    let dof = (x.len() as f64 - 1.0).max(1.0);
    ThroughOrigin {
        slope,
        stderr: (rss / dof / sxx).sqrt(),
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else if rss == 0.0 { 1.0 } else { 0.0 },
    }
}

/// Inverse-variance weights from bootstrap errors when every point has a
/// positive error, unit weights otherwise.
fn weights(points: &[CumulantSet], which: usize) -> Vec<f64> {
    let errs: Option<Vec<f64>> = points
        .iter()
        .map(|p| p.errors.map(|e| e[which]).filter(|&e| e > 0.0))
        .collect();
    match errs {
        Some(e) => e.iter().map(|s| 1.0 / (s * s)).collect(),
        None => vec![1.0; points.len()],
    }
}

fn check_points(points: &[CumulantSet]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "ratio fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().all(|p| p.k1.abs() < 1e-12) {
        return Err(Error::InsufficientData("k1 vanishes at every point".into()));
    }
    Ok(())
}

/// Weighted least-squares ratios `k2/k1`, `k3/k1` through the origin, with
/// regression-covariance errors.
pub fn fit_cumulant_ratios(points: &[CumulantSet]) -> Result<RatioFit> {
    check_points(points)?;
    let x: Vec<f64> = points.iter().map(|p| p.k1).collect();
    let y2: Vec<f64> = points.iter().map(|p| p.k2).collect();
    let y3: Vec<f64> = points.iter().map(|p| p.k3).collect();
    let f2 = fit_through_origin(&x, &y2, &weights(points, 1));
    let f3 = fit_through_origin(&x, &y3, &weights(points, 2));
    Ok(RatioFit {
        k2_over_k1: f2.slope,
        k3_over_k1: f3.slope,
        k2_err: f2.stderr,
        k3_err: f3.stderr,
        r_squared_k2: f2.r_squared,
        r_squared_k3: f3.r_squared,
        n_points: points.len(),
        bootstrap_errors: false,
    })
}

/// Ratio fit over a window of histograms with errors from resampling
/// replicas independently in every histogram and refitting with the
/// original weights.
pub fn bootstrap_cumulant_ratios(
    hists: &[&DefectHistogram],
    resamples: usize,
    seed: u64,
) -> Result<RatioFit> {
    let points: Vec<CumulantSet> = hists
        .iter()
        .enumerate()
        .map(|(k, h)| cumulants(h, resamples, mix(seed, k as u64)))
        .collect::<Result<_>>()?;
    let mut fit = fit_cumulant_ratios(&points)?;
    if resamples < 2 {
        return Ok(fit);
    }
    let (w2, w3) = (weights(&points, 1), weights(&points, 2));
    let mut rng = rng_from_seed(mix(seed, u64::MAX));
    let mut bufs: Vec<Vec<u64>> = hists.iter().map(|h| vec![0; h.counts().len()]).collect();
    let (mut r2, mut r3) = (Vec::with_capacity(resamples), Vec::with_capacity(resamples));
    let mut x = vec![0.0; hists.len()];
    let mut y2 = vec![0.0; hists.len()];
    let mut y3 = vec![0.0; hists.len()];
    for _ in 0..resamples {
        for (k, (h, buf)) in hists.iter().zip(bufs.iter_mut()).enumerate() {
            resample_into(h, &mut rng, buf);
            let (a, b, c) = central_moments(buf).expect("resample keeps the total");
            x[k] = a;
            y2[k] = b;
            y3[k] = c;
        }
        r2.push(fit_through_origin(&x, &y2, &w2).slope);
        r3.push(fit_through_origin(&x, &y3, &w3).slope);
    }
    fit.k2_err = std_dev(&r2);
    fit.k3_err = std_dev(&r3);
    fit.bootstrap_errors = true;
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::HistogramMode;
    use proptest::prelude::*;

    fn hist_from(l: usize, obs: &[u32]) -> DefectHistogram {
        let mut h = DefectHistogram::new(l);
        for &n in obs {
            h.record(n).unwrap();
        }
        h
    }

    #[test]
    fn degenerate_distribution() {
        let c = cumulants(&hist_from(4, &[0, 0, 0]), 100, 1).unwrap();
        assert_eq!((c.k1, c.k2, c.k3), (0.0, 0.0, 0.0));
        assert_eq!(c.errors.unwrap(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn two_point_distribution() {
        let c = cumulants(&hist_from(4, &[0, 1]), 0, 1).unwrap();
        assert_eq!((c.k1, c.k2, c.k3), (0.5, 0.25, 0.0));
        assert!(c.errors.is_none());
    }

    #[test]
    fn too_few_observations() {
        assert!(cumulants(&hist_from(4, &[2]), 10, 1).is_err());
        assert!(cumulants(&DefectHistogram::new(4), 10, 1).is_err());
    }

    #[test]
    fn third_moment_by_hand() {
        // {0, 0, 3}: mean 1, m2 = (1 + 1 + 4)/3 = 2, m3 = (-1 - 1 + 8)/3 = 2.
        let c = cumulants(&hist_from(4, &[0, 0, 3]), 0, 0).unwrap();
        assert!((c.k1 - 1.0).abs() < 1e-15);
        assert!((c.k2 - 2.0).abs() < 1e-15);
        assert!((c.k3 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn replica_bootstrap_is_wider_than_slice_bootstrap() {
        // Replicas whose slices all agree: resampling replicas must see the
        // spread between replicas, resampling slices would underestimate it.
        let replicas: Vec<Vec<u32>> = (0..20).map(|r| vec![(r % 5) as u32; 50]).collect();
        let blocked = DefectHistogram::from_replica_slices(8, &replicas, HistogramMode::AllSlices).unwrap();
        let pooled = DefectHistogram::from_counts(8, blocked.counts().to_vec()).unwrap();
        let a = cumulants(&blocked, 500, 3).unwrap();
        let b = cumulants(&pooled, 500, 3).unwrap();
        assert_eq!(a.replicas, 20);
        assert_eq!(b.replicas, 0);
        assert!(a.errors.unwrap()[0] > 3.0 * b.errors.unwrap()[0]);
    }

    fn synthetic(k1: f64, r2: f64, r3: f64) -> CumulantSet {
        CumulantSet {
            k1,
            k2: r2 * k1,
            k3: r3 * k1,
            errors: None,
            observations: 100,
            replicas: 10,
        }
    }

    #[test]
    fn exact_proportionality() {
        let pts: Vec<_> = [1.0, 2.5, 4.0, 7.0].iter().map(|&k| synthetic(k, 0.578, 0.134)).collect();
        let f = fit_cumulant_ratios(&pts).unwrap();
        assert!((f.k2_over_k1 - 0.578).abs() < 1e-12);
        assert!((f.k3_over_k1 - 0.134).abs() < 1e-12);
        assert!(f.k2_err < 1e-12);
        assert!((f.r_squared_k2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_fit_rejects_degenerate_input() {
        assert!(fit_cumulant_ratios(&[synthetic(1.0, 0.5, 0.1)]).is_err());
        assert!(fit_cumulant_ratios(&[synthetic(0.0, 0.5, 0.1), synthetic(0.0, 0.5, 0.1)]).is_err());
    }

    #[test]
    fn bootstrap_ratio_errors_are_finite() {
        let make = |shift: u32| {
            let replicas: Vec<Vec<u32>> = (0..30)
                .map(|r| (0..16).map(|s| shift + (r * 7 + s * 3) % (shift + 2)).collect())
                .collect();
            DefectHistogram::from_replica_slices(64, &replicas, HistogramMode::AllSlices).unwrap()
        };
        let hs = [make(2), make(5), make(9)];
        let refs: Vec<_> = hs.iter().collect();
        let f = bootstrap_cumulant_ratios(&refs, 200, 11).unwrap();
        assert!(f.bootstrap_errors);
        assert!(f.k2_err.is_finite() && f.k2_err > 0.0);
        let again = bootstrap_cumulant_ratios(&refs, 200, 11).unwrap();
        assert_eq!(f, again);
    }

    proptest! {
        #[test]
        fn translation_consistency(obs in proptest::collection::vec(0u32..20, 2..60), shift in 0u32..20) {
            let a = cumulants(&hist_from(40, &obs), 0, 0).unwrap();
            let shifted: Vec<u32> = obs.iter().map(|n| n + shift).collect();
            let b = cumulants(&hist_from(40, &shifted), 0, 0).unwrap();
            prop_assert!((b.k1 - a.k1 - f64::from(shift)).abs() < 1e-10);
            prop_assert!((b.k2 - a.k2).abs() < 1e-10);
            prop_assert!((b.k3 - a.k3).abs() < 1e-10);
            prop_assert!(a.k2 >= 0.0);
        }
    }
}
