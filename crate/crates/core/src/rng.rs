//! Counter-based random streams.
//!
//! Every particle draws from its own Philox4x32-10 stream whose key is a
//! hash of the run seed and the particle's label, so a tree is reproduced
//! bit for bit no matter in which order its branches are simulated.

#[allow(unused_imports)] // shadowed by inherent methods when a dependent links std
use num_traits::Float;
use rand_core::{impls, RngCore};
use rand_distr::{Distribution, Poisson, StandardNormal};

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = (a as u64) * (b as u64);
    ((p >> 32) as u32, p as u32)
}

/// The Philox4x32 block function with 10 rounds.
pub fn philox4x32_10(mut ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let (mut k0, mut k1) = (key[0], key[1]);
    for round in 0..10 {
        if round > 0 {
            k0 = k0.wrapping_add(W0);
            k1 = k1.wrapping_add(W1);
        }
        let (hi0, lo0) = mulhilo(M0, ctr[0]);
        let (hi1, lo1) = mulhilo(M1, ctr[2]);
        ctr = [hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0];
    }
    ctr
}

/// SplitMix64 finalizer, used to derive stream keys.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `index` within a run seeded by `seed`.
#[inline]
pub fn replica_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Key of the root stream of a tree.
#[inline]
pub fn root_key(seed: u64) -> u64 {
    mix64(seed ^ 0x5851_F42D_4C95_7F2D)
}

/// Key of child `digit` of the stream keyed `parent`.
#[inline]
pub fn child_key(parent: u64, digit: u8) -> u64 {
    mix64(parent ^ (digit as u64).wrapping_mul(0xA076_1D64_78BD_642F))
}

/// A stream of the Philox generator: fixed key, 64-bit block counter.
#[derive(Debug, Clone)]
pub struct Philox {
    key: [u32; 2],
    counter: u64,
    lane: u32,
    buf: [u32; 4],
    idx: usize,
}

impl Philox {
    pub fn new(key: u64) -> Self {
        Self::with_lane(key, 0)
    }

    /// Independent sub-stream `lane` of the same key, for auxiliary draws.
    pub fn with_lane(key: u64, lane: u32) -> Self {
        Self { key: [key as u32, (key >> 32) as u32], counter: 0, lane, buf: [0; 4], idx: 4 }
    }

    #[inline]
    fn refill(&mut self) {
        let c = self.counter;
        self.buf = philox4x32_10([c as u32, (c >> 32) as u32, self.lane, 0], self.key);
        self.counter = c.wrapping_add(1);
        self.idx = 0;
    }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }

    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -self.uniform().ln()
    }

    /// Poisson count with the given mean (0 for a non-positive mean).
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if !(mean > 0.0) {
            return 0;
        }
        match Poisson::new(mean) {
            Ok(d) => d.sample(self) as u64,
            Err(_) => 0,
        }
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

impl RngCore for Philox {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        if self.idx >= 4 {
            self.refill();
        }
        let v = self.buf[self.idx];
        self.idx += 1;
        v
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        let lo = self.next_u32() as u64;
        let hi = self.next_u32() as u64;
        (hi << 32) | lo
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        impls::fill_bytes_via_next(self, dest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn known_answers() {
        assert_eq!(philox4x32_10([0; 4], [0; 2]), [0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8]);
        assert_eq!(
            philox4x32_10([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd]
        );
        assert_eq!(
            philox4x32_10([0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344], [0xa4093822, 0x299f31d0]),
            [0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1]
        );
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = Philox::new(child_key(root_key(7), 1));
        let mut b = Philox::new(child_key(root_key(7), 1));
        let mut c = Philox::new(child_key(root_key(7), 2));
        let va: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let vb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let vc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(va, vb);
        assert_ne!(va, vc);
        assert_ne!(replica_seed(1, 0), replica_seed(1, 1));
    }

    #[test]
    fn moments() {
        let mut g = Philox::new(42);
        let n = 200_000;
        let (mut s1, mut s2, mut u) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let z = g.normal();
            s1 += z;
            s2 += z * z;
            u += g.uniform();
        }
        let n = n as f64;
        assert!((s1 / n).abs() < 0.01);
        assert!((s2 / n - 1.0).abs() < 0.02);
        assert!((u / n - 0.5).abs() < 0.005);
        let m: u64 = (0..20_000).map(|_| g.poisson(3.5)).sum();
        assert!((m as f64 / 20_000.0 - 3.5).abs() < 0.06);
    }
}
