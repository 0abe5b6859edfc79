use rand::RngCore;

use super::kernel::BathKernel;
use crate::error::{Error, Result};

/// `L x P` lattice of classical spins, free in space and periodic in
/// imaginary time.
///
/// Storage is site-major (`index = i * P + tau`), so the imaginary-time row of
/// one site is contiguous. Internally one row of zeros pads each end of the
/// chain, which lets the update loop read both spatial neighbours without
/// boundary branches. The optional bath-field cache holds, for every
/// `(i, tau)`, `sum_{tau' != tau} K(|tau - tau'|) S_i(tau')`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinField {
    l: usize,
    p: usize,
    padded: Vec<i8>,
    bath: Option<Vec<f64>>,
}

fn pad(l: usize, p: usize, spins: impl IntoIterator<Item = i8>) -> Vec<i8> {
    let mut padded = Vec::with_capacity((l + 2) * p);
    padded.extend(std::iter::repeat_n(0, p));
    padded.extend(spins);
    padded.extend(std::iter::repeat_n(0, p));
    padded
}

impl SpinField {
    pub fn new_all_up(l: usize, p: usize) -> Result<Self> {
        check_dims(l, p)?;
        Ok(SpinField {
            l,
            p,
            padded: pad(l, p, std::iter::repeat_n(1, l * p)),
            bath: None,
        })
    }

    /// Independent uniform `+-1` spins, 64 spins per random word.
    pub fn new_random<R: RngCore + ?Sized>(l: usize, p: usize, rng: &mut R) -> Result<Self> {
        check_dims(l, p)?;
        let mut spins = Vec::with_capacity(l * p);
        while spins.len() < l * p {
            let word = rng.next_u64();
            let take = (l * p - spins.len()).min(64);
            spins.extend((0..take).map(|b| if (word >> b) & 1 == 1 { 1 } else { -1 }));
        }
        Ok(SpinField {
            l,
            p,
            padded: pad(l, p, spins),
            bath: None,
        })
    }

    /// Builds a field from site-major spins (`spins[i * P + tau]`).
    pub fn from_spins(l: usize, p: usize, spins: Vec<i8>) -> Result<Self> {
        check_dims(l, p)?;
        if spins.len() != l * p {
            return Err(Error::DimensionMismatch {
                expected: format!("{} spins", l * p),
                found: format!("{} spins", spins.len()),
            });
        }
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::invalid(format!("spin values must be +-1, found {bad}")));
        }
        Ok(SpinField {
            l,
            p,
            padded: pad(l, p, spins),
            bath: None,
        })
    }

    #[inline]
    pub fn l(&self) -> usize {
        self.l
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    /// Spin at site `i`, slice `tau` (0-based). Panics when out of range.
    #[inline]
    pub fn get(&self, i: usize, tau: usize) -> i8 {
        assert!(i < self.l && tau < self.p, "({i}, {tau}) outside {}x{}", self.l, self.p);
        self.padded[(i + 1) * self.p + tau]
    }

    /// Site-major spin storage.
    #[inline]
    pub fn spins(&self) -> &[i8] {
        &self.padded[self.p..(self.l + 1) * self.p]
    }

    /// Storage including one zero row before site 0 and after site `L - 1`;
    /// spin `(i, tau)` lives at `(i + 1) * P + tau`.
    #[inline]
    pub(crate) fn padded(&self) -> &[i8] {
        &self.padded
    }

    #[inline]
    pub(crate) fn padded_mut(&mut self) -> &mut [i8] {
        &mut self.padded
    }

    /// Imaginary-time row of site `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[i8] {
        &self.padded[(i + 1) * self.p..(i + 2) * self.p]
    }

    pub fn check_index(&self, i: usize, tau: usize) -> Result<()> {
        if i >= self.l {
            return Err(Error::IndexOutOfRange {
                what: "site",
                index: i,
                limit: self.l,
            });
        }
        if tau >= self.p {
            return Err(Error::IndexOutOfRange {
                what: "slice",
                index: tau,
                limit: self.p,
            });
        }
        Ok(())
    }

    pub(crate) fn check_kernel(&self, kernel: &BathKernel) -> Result<()> {
        if kernel.p() != self.p {
            return Err(Error::DimensionMismatch {
                expected: format!("kernel with P = {}", self.p),
                found: format!("kernel with P = {}", kernel.p()),
            });
        }
        Ok(())
    }

    /// Turns on the bath-field cache and fills it from scratch.
    pub fn enable_bath_cache(&mut self, kernel: &BathKernel) -> Result<()> {
        self.check_kernel(kernel)?;
        self.bath = Some(self.bath_field_from_scratch(kernel));
        Ok(())
    }

    pub fn disable_bath_cache(&mut self) {
        self.bath = None;
    }

    pub fn has_bath_cache(&self) -> bool {
        self.bath.is_some()
    }

    pub fn bath_field(&self) -> Option<&[f64]> {
        self.bath.as_deref()
    }

    /// The bath field evaluated directly from its definition, `O(L P^2)`.
    pub fn bath_field_from_scratch(&self, kernel: &BathKernel) -> Vec<f64> {
        let p = self.p;
        let mut out = vec![0.0; self.l * p];
        for i in 0..self.l {
            let row = self.row(i);
            for tau in 0..p {
                let mut h = 0.0;
                for (other, &s) in row.iter().enumerate() {
                    if other != tau {
                        h += kernel.get(tau.abs_diff(other)) * f64::from(s);
                    }
                }
                out[i * p + tau] = h;
            }
        }
        out
    }

    /// Bath field at one spin: the cached value when available, else an
    /// `O(P)` sum.
    #[inline]
    pub(crate) fn local_bath_field(&self, i: usize, tau: usize, kernel: &BathKernel) -> f64 {
        if let Some(cache) = &self.bath {
            return cache[i * self.p + tau];
        }
        if kernel.is_zero() {
            return 0.0;
        }
        let row = self.row(i);
        let mut h = 0.0;
        for (other, &s) in row.iter().enumerate() {
            h += kernel.get(tau.abs_diff(other)) * f64::from(s);
        }
        h
    }

    /// Negates `S_i(tau)` and keeps the bath-field cache coherent.
    pub fn apply_flip(&mut self, i: usize, tau: usize, kernel: &BathKernel) -> Result<()> {
        self.check_index(i, tau)?;
        if self.bath.is_some() {
            self.check_kernel(kernel)?;
        }
        self.apply_flip_unchecked(i, tau, kernel);
        Ok(())
    }

    #[inline]
    pub(crate) fn apply_flip_unchecked(&mut self, i: usize, tau: usize, kernel: &BathKernel) {
        let p = self.p;
        let idx = (i + 1) * p + tau;
        let new = -self.padded[idx];
        self.padded[idx] = new;
        if let Some(cache) = self.bath.as_mut() {
            let delta = 2.0 * f64::from(new);
            let k = kernel.periodic();
            let row = &mut cache[i * p..(i + 1) * p];
            // Slices tau.. sit at separation 0.., slices ..tau wrap around.
            let (before, after) = row.split_at_mut(tau);
            for (h, &kd) in after.iter_mut().zip(&k[..p - tau]) {
                *h += delta * kd;
            }
            for (h, &kd) in before.iter_mut().zip(&k[p - tau..]) {
                *h += delta * kd;
            }
        }
    }

    /// Global spin reversal. The bath cache, if any, is negated with it.
    pub fn flip_all(&mut self) {
        self.padded.iter_mut().for_each(|s| *s = -*s);
        if let Some(cache) = self.bath.as_mut() {
            cache.iter_mut().for_each(|h| *h = -*h);
        }
    }
}

fn check_dims(l: usize, p: usize) -> Result<()> {
    if l < 2 {
        return Err(Error::invalid(format!("L must be >= 2, got {l}")));
    }
    if p < 2 {
        return Err(Error::invalid(format!("P must be >= 2, got {p}")));
    }
    // Proposals draw each coordinate from 16 random bits.
    if l > 1 << 16 || p > 1 << 16 {
        return Err(Error::invalid(format!("lattice {l}x{p} too large (max 65536 per axis)")));
    }
    Ok(())
}
