//! Random number plumbing shared by every replica.
//!
//! Each replica owns a xoshiro256++ stream seeded from
//! `replica_seed(master, r)`, so replicas are independent and any single one
//! can be replayed from its recorded seed.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type ReplicaRng = Xoshiro256PlusPlus;

pub fn rng_from_seed(seed: u64) -> ReplicaRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a parent seed with a stream label into a child seed.
pub fn mix(parent: u64, label: u64) -> u64 {
    splitmix64(parent ^ splitmix64(label.wrapping_add(0x6A09_E667_F3BC_C909)))
}

/// Seed of replica `replica` under `master`.
pub fn replica_seed(master: u64, replica: u64) -> u64 {
    mix(master, replica)
}

/// Lemire reduction of a 16-bit word onto `0..n` (`n <= 2^16`).
#[inline(always)]
fn bounded_u16(x: u16, n: u32) -> Option<usize> {
    let m = u32::from(x) * n;
    let low = m & 0xFFFF;
    if low < n {
        let threshold = (0x1_0000 - n) % n;
        if low < threshold {
            return None;
        }
    }
    Some((m >> 16) as usize)
}

/// One Metropolis proposal from a single 64-bit word: a uniform
/// `(site, slice)` pair from the low 32 bits and a uniform 32-bit integer
/// (the acceptance variate `u = x / 2^32`) from the high 32 bits.
/// Requires `l, p <= 2^16`.
#[inline(always)]
pub(crate) fn proposal<R: RngCore + ?Sized>(rng: &mut R, l: u32, p: u32) -> (usize, usize, u64) {
    loop {
        let r = rng.next_u64();
        if let (Some(i), Some(tau)) = (bounded_u16((r >> 16) as u16, l), bounded_u16(r as u16, p)) {
            return (i, tau, r >> 32);
        }
    }
}
