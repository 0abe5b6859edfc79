//! Kink counts, residual energy and defect histograms of final
//! configurations.
//!
//! A defect is an anti-aligned nearest-neighbour pair within one Trotter
//! slice, so the per-slice count lies in `0..=L-1`.

use serde::{Deserialize, Serialize};

use crate::anneal::ReplicaResult;
use crate::error::{Error, Result};
use crate::pimc::SpinField;

/// Number of broken bonds in slice `tau`.
pub fn defects_per_slice(field: &SpinField, tau: usize) -> Result<u32> {
    field.check_index(0, tau)?;
    Ok(slice_defects_unchecked(field, tau))
}

fn slice_defects_unchecked(field: &SpinField, tau: usize) -> u32 {
    let p = field.p();
    let spins = field.spins();
    (0..field.l() - 1)
        .map(|i| u32::from(spins[i * p + tau] != spins[(i + 1) * p + tau]))
        .sum()
}

/// Kink count of every slice, in slice order.
pub fn slice_defects(field: &SpinField) -> Vec<u32> {
    let (l, p) = (field.l(), field.p());
    let mut out = vec![0u32; p];
    for i in 0..l - 1 {
        let (a, b) = (field.row(i), field.row(i + 1));
        for (n, (x, y)) in out.iter_mut().zip(a.iter().zip(b)) {
            *n += u32::from(x != y);
        }
    }
    out
}

/// Sum over all bonds and slices of `1 - S_i(tau) S_{i+1}(tau)`, i.e. twice the
/// total kink count.
pub fn bond_defect_sum(field: &SpinField) -> u64 {
    2 * slice_defects(field).iter().map(|&n| u64::from(n)).sum::<u64>()
}

/// Residual energy per site,
/// `(1/L) sum_{i<L-1} (1 - (1/P) sum_tau S_i(tau) S_{i+1}(tau))`.
pub fn residual_energy(field: &SpinField) -> f64 {
    let (l, p) = (field.l(), field.p());
    let mut total = 0.0;
    for i in 0..l - 1 {
        let corr: i64 = field
            .row(i)
            .iter()
            .zip(field.row(i + 1))
            .map(|(&a, &b)| i64::from(a * b))
            .sum();
        total += 1.0 - corr as f64 / p as f64;
    }
    total / l as f64
}

/// Residual energy per site from per-slice kink counts, `2 sum_tau n(tau) / (L P)`.
pub fn residual_energy_from_defects(l: usize, slices: &[u32]) -> f64 {
    let kinks: u64 = slices.iter().map(|&n| u64::from(n)).sum();
    2.0 * kinks as f64 / (l * slices.len()) as f64
}

/// Which slices of each replica feed a histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramMode {
    /// Every slice of every replica is one observation.
    #[default]
    AllSlices,
    /// Only the first slice of every replica.
    SingleSlice,
}

impl HistogramMode {
    fn select<'a>(&self, slices: &'a [u32]) -> &'a [u32] {
        match self {
            HistogramMode::AllSlices => slices,
            HistogramMode::SingleSlice => &slices[..1.min(slices.len())],
        }
    }
}

/// Empirical distribution of per-slice kink counts.
///
/// Besides the pooled counts the histogram keeps one count vector per
/// replica, so that resampling can treat a replica (whose slices are
/// correlated) as the independent unit.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectHistogram {
    l: usize,
    counts: Vec<u64>,
    total: u64,
    blocks: Vec<Vec<u64>>,
    mode: Option<HistogramMode>,
}

impl DefectHistogram {
    /// Empty histogram over `0..=L-1`.
    pub fn new(l: usize) -> Self {
        DefectHistogram {
            l,
            counts: vec![0; l.max(1)],
            total: 0,
            blocks: Vec::new(),
            mode: None,
        }
    }

    /// Pooled counts without replica structure.
    pub fn from_counts(l: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != l {
            return Err(Error::DimensionMismatch {
                expected: format!("{l} bins"),
                found: format!("{} bins", counts.len()),
            });
        }
        let total = counts.iter().sum();
        Ok(DefectHistogram {
            l,
            counts,
            total,
            blocks: Vec::new(),
            mode: None,
        })
    }

    /// One block per replica from its per-slice kink counts.
    pub fn from_replica_slices(l: usize, replicas: &[Vec<u32>], mode: HistogramMode) -> Result<Self> {
        let mut hist = DefectHistogram::new(l);
        hist.mode = Some(mode);
        for slices in replicas {
            let mut block = vec![0u64; l];
            for &n in mode.select(slices) {
                let n = n as usize;
                if n >= l {
                    return Err(Error::IndexOutOfRange {
                        what: "defect count",
                        index: n,
                        limit: l,
                    });
                }
                block[n] += 1;
            }
            hist.push_block(block);
        }
        Ok(hist)
    }

    fn push_block(&mut self, block: Vec<u64>) {
        for (c, b) in self.counts.iter_mut().zip(&block) {
            *c += b;
        }
        self.total += block.iter().sum::<u64>();
        self.blocks.push(block);
    }

    /// Adds one observation to the pooled counts (no block).
    pub fn record(&mut self, n: u32) -> Result<()> {
        let idx = n as usize;
        if idx >= self.l {
            return Err(Error::IndexOutOfRange {
                what: "defect count",
                index: idx,
                limit: self.l,
            });
        }
        self.counts[idx] += 1;
        self.total += 1;
        Ok(())
    }

    /// Associative merge of two histograms over the same `L`.
    pub fn merge(&mut self, other: &DefectHistogram) -> Result<()> {
        if other.l != self.l {
            return Err(Error::DimensionMismatch {
                expected: format!("L = {}", self.l),
                found: format!("L = {}", other.l),
            });
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.total += other.total;
        self.blocks.extend(other.blocks.iter().cloned());
        if self.mode != other.mode {
            self.mode = None;
        }
        Ok(())
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Per-replica count vectors; empty when built from pooled counts.
    pub fn blocks(&self) -> &[Vec<u64>] {
        &self.blocks
    }

    pub fn mode(&self) -> Option<HistogramMode> {
        self.mode
    }

    /// Normalized empirical pmf over `0..=L-1`.
    pub fn pmf(&self) -> Vec<f64> {
        let total = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }

    pub fn mean(&self) -> f64 {
        let s: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(n, &c)| n as f64 * c as f64)
            .sum();
        s / self.total as f64
    }
}

/// Pools the final kink counts of a set of replicas sharing `L` and `P`.
pub fn collect_histogram(results: &[ReplicaResult], mode: HistogramMode) -> Result<DefectHistogram> {
    let first = results
        .first()
        .ok_or_else(|| Error::InsufficientData("no replica results".into()))?;
    let (l, p) = (first.final_field.l(), first.final_field.p());
    let mut slices = Vec::with_capacity(results.len());
    for r in results {
        let f = &r.final_field;
        if (f.l(), f.p()) != (l, p) {
            return Err(Error::DimensionMismatch {
                expected: format!("{l}x{p}"),
                found: format!("{}x{}", f.l(), f.p()),
            });
        }
        slices.push(slice_defects(f));
    }
    DefectHistogram::from_replica_slices(l, &slices, mode)
}

/// Mean residual energy at one annealing time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualEnergyPoint {
    pub ta: u32,
    pub mean: f64,
    /// Standard error of the mean; absent with fewer than two samples.
    pub stderr: Option<f64>,
    pub n_samples: usize,
}

impl ResidualEnergyPoint {
    pub fn from_samples(ta: u32, samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientData(format!("no samples at ta = {ta}")));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let stderr = (samples.len() >= 2).then(|| {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        });
        Ok(ResidualEnergyPoint {
            ta,
            mean,
            stderr,
            n_samples: samples.len(),
        })
    }
}

/// `E_res` against annealing time, sorted by `ta`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualEnergySeries {
    pub points: Vec<ResidualEnergyPoint>,
}

impl ResidualEnergySeries {
    pub fn new(mut points: Vec<ResidualEnergyPoint>) -> Self {
        points.sort_by_key(|p| p.ta);
        ResidualEnergySeries { points }
    }

    pub fn push(&mut self, point: ResidualEnergyPoint) {
        let at = self.points.partition_point(|p| p.ta < point.ta);
        self.points.insert(at, point);
    }
}
