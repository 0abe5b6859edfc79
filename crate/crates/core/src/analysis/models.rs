use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gaussian density `exp(-(n - k1)^2 / (2 k2)) / sqrt(2 pi k2)` at integer `n`.
/// Not renormalized over the integers.
pub fn gaussian_pmf(n: i64, k1: f64, k2: f64) -> Result<f64> {
    if !(k2 > 0.0 && k2.is_finite()) {
        return Err(Error::invalid(format!("Gaussian variance must be > 0, got {k2}")));
    }
    let d = n as f64 - k1;
    Ok((-d * d / (2.0 * k2)).exp() / (2.0 * PI * k2).sqrt())
}

/// [`gaussian_pmf`] on `0..l`.
pub fn gaussian_distribution(l: usize, k1: f64, k2: f64) -> Result<Vec<f64>> {
    (0..l as i64).map(|n| gaussian_pmf(n, k1, k2)).collect()
}

/// `ln C(m, k)` for every `k` in `0..=m`.
fn ln_binomials(m: usize) -> Vec<f64> {
    let mut ln_fact = Vec::with_capacity(m + 1);
    let mut acc = 0.0;
    ln_fact.push(0.0);
    for k in 1..=m {
        acc += (k as f64).ln();
        ln_fact.push(acc);
    }
    (0..=m).map(|k| ln_fact[m] - ln_fact[k] - ln_fact[m - k]).collect()
}

/// Boltzmann weights of an open classical chain with `L - 1` bonds at `J = 1`:
/// `C(L-1, n) exp(-beta E(n)) / Z` with `E(n) = 2n - (L-1)`, for `n` in `0..L`.
/// Evaluated in the log domain.
pub fn boltzmann_distribution(l: usize, beta: f64) -> Result<Vec<f64>> {
    if l < 2 {
        return Err(Error::invalid(format!("L must be >= 2, got {l}")));
    }
    if !(beta >= 0.0) || beta.is_nan() {
        return Err(Error::invalid(format!("beta_BL must be >= 0, got {beta}")));
    }
    let bonds = l - 1;
    let log_w: Vec<f64> = ln_binomials(bonds)
        .into_iter()
        .enumerate()
        .map(|(n, lc)| lc - beta * (2.0 * n as f64 - bonds as f64))
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_w.iter().map(|w| (w - max).exp()).collect();
    let z: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / z).collect())
}

/// One entry of [`boltzmann_distribution`].
pub fn boltzmann_pmf(n: usize, l: usize, beta: f64) -> Result<f64> {
    if n >= l {
        return Err(Error::IndexOutOfRange {
            what: "defect count",
            index: n,
            limit: l,
        });
    }
    Ok(boltzmann_distribution(l, beta)?[n])
}

/// `1/2 sum_n |p(n) - q(n)|`; a missing tail counts as zero.
pub fn l1_distance(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let at = |v: &[f64], n: usize| v.get(n).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|n| (at(p, n) - at(q, n)).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gaussian_values() {
        let peak = gaussian_pmf(7, 7.0, 2.5).unwrap();
        assert!((peak - 1.0 / (2.0 * PI * 2.5).sqrt()).abs() < 1e-15);
        assert_eq!(gaussian_pmf(9, 7.0, 2.5).unwrap(), gaussian_pmf(5, 7.0, 2.5).unwrap());
        // exp(-1/2) / sqrt(8 pi), evaluated independently.
        assert!((gaussian_pmf(12, 10.0, 4.0).unwrap() - 0.120_985_362_259_571_68).abs() < 1e-15);
        assert!(gaussian_pmf(0, 0.0, 0.0).is_err());
        assert!(gaussian_pmf(0, 0.0, -1.0).is_err());
    }

    #[test]
    fn boltzmann_three_sites_by_hand() {
        // Two bonds: E in {-2, 0, 2} with degeneracies {1, 2, 1}.
        let b: f64 = 1.0;
        let w = [(2.0 * b).exp(), 2.0, (-2.0 * b).exp()];
        let z: f64 = w.iter().sum();
        let pmf = boltzmann_distribution(3, b).unwrap();
        for (x, y) in pmf.iter().zip(w) {
            assert!((x - y / z).abs() < 1e-15);
        }
    }

    #[test]
    fn boltzmann_limits() {
        let hot = boltzmann_distribution(11, 0.0).unwrap();
        let binom = [1.0, 10.0, 45.0, 120.0, 210.0, 252.0, 210.0, 120.0, 45.0, 10.0, 1.0];
        for (x, c) in hot.iter().zip(binom) {
            assert!((x - c / 1024.0).abs() < 1e-14);
        }
        let cold = boltzmann_distribution(512, 200.0).unwrap();
        assert!((cold[0] - 1.0).abs() < 1e-12);
        assert!(boltzmann_pmf(3, 3, 1.0).is_err());
        assert!(boltzmann_distribution(8, -1.0).is_err());
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_distance(&[0.2, 0.8], &[0.2, 0.8]), 0.0);
        assert_eq!(l1_distance(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert_eq!(l1_distance(&[1.0, 0.0], &[0.5, 0.5]), 0.5);
        assert_eq!(l1_distance(&[1.0], &[0.0, 0.0, 1.0]), 1.0);
    }

    proptest! {
        #[test]
        fn boltzmann_normalized(l in 2usize..=1024, beta in 0.0f64..=20.0) {
            let pmf = boltzmann_distribution(l, beta).unwrap();
            prop_assert_eq!(pmf.len(), l);
            prop_assert!(pmf.iter().all(|&x| x >= 0.0));
            prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn l1_is_a_metric(raw in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 1..20)) {
            let norm = |v: Vec<f64>| { let s: f64 = v.iter().sum::<f64>() + 1e-300; v.into_iter().map(|x| x / s).collect::<Vec<_>>() };
            let p = norm(raw.iter().map(|t| t.0).collect());
            let q = norm(raw.iter().map(|t| t.1).collect());
            let r = norm(raw.iter().map(|t| t.2).collect());
            prop_assert!(l1_distance(&p, &p) < 1e-12);
            prop_assert_eq!(l1_distance(&p, &q), l1_distance(&q, &p));
            prop_assert!(l1_distance(&p, &r) <= l1_distance(&p, &q) + l1_distance(&q, &r) + 1e-12);
            prop_assert!(l1_distance(&p, &q) <= 1.0 + 1e-12);
        }
    }
}
