//! Counter-based random streams.
//!
//! Every variate is a pure function of `(master seed, label, key path,
//! counter)`, so any stream can be addressed directly without replaying
//! its predecessors and without sharing mutable generator state between
//! workers. The mixing function is the SplitMix64 finalizer.

use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a, used to turn stream labels into stable integers.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// A named randomness source: one master seed, one purpose.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_label: String,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_label: impl Into<String>) -> Self {
        Self {
            master_seed,
            stream_label: stream_label.into(),
        }
    }

    /// Seed for replica `index` of a batch driven by `master_seed`.
    ///
    /// Replica `i` depends on `(master_seed, i)` only, so any single replica
    /// can be rerun in isolation.
    pub fn replica(master_seed: u64, index: u64, stream_label: impl Into<String>) -> Self {
        Self::new(
            mix64(master_seed ^ mix64(index.wrapping_add(0x5851_F42D_4C95_7F2D))),
            stream_label,
        )
    }

    pub fn key(&self) -> StreamKey {
        StreamKey(mix64(
            self.master_seed ^ mix64(fnv1a(self.stream_label.as_bytes())),
        ))
    }
}

/// Address of one random stream; children address sub-streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    #[inline]
    pub fn child(self, id: u64) -> StreamKey {
        StreamKey(mix64(self.0 ^ mix64(id.wrapping_mul(GOLDEN) ^ 0xD1B5_4A32_D192_ED03)))
    }

    #[inline]
    pub fn bits(self, counter: u64) -> u64 {
        mix64(self.0.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform variate in the open interval (0, 1).
    #[inline]
    pub fn uniform(self, counter: u64) -> f64 {
        ((self.bits(counter) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard exponential variate.
    #[inline]
    pub fn exponential(self, counter: u64) -> f64 {
        -self.uniform(counter).ln()
    }
}

/// Poisson(1) by inversion of one uniform.
#[inline]
fn poisson_unit(u: f64) -> u32 {
    let mut k = 0u32;
    let mut p = (-1.0f64).exp();
    let mut cdf = p;
    while u > cdf && k < 64 {
        k += 1;
        p /= f64::from(k);
        cdf += p;
    }
    k
}

/// Homogeneous Poisson process on `[0, ∞)` with random access by time.
///
/// Time is cut into blocks of length `1/rate`; block `b` holds a Poisson(1)
/// number of points placed uniformly, all drawn from the sub-stream keyed by
/// `b`. Looking up the first point after any time therefore costs O(1)
/// expected work, independently of how far along the process is.
#[derive(Debug, Clone, Copy)]
pub struct PoissonClock {
    key: StreamKey,
    block: f64,
}

impl PoissonClock {
    pub fn new(key: StreamKey, rate: f64) -> Self {
        debug_assert!(rate > 0.0);
        Self {
            key,
            block: 1.0 / rate,
        }
    }

    /// Sorted points of block `b`, appended to `out`.
    fn block_points(&self, b: u64, out: &mut Vec<f64>) {
        let key = self.key.child(b);
        let n = poisson_unit(key.uniform(0));
        let start = out.len();
        let origin = b as f64 * self.block;
        for j in 0..n {
            out.push(origin + key.uniform(u64::from(j) + 1) * self.block);
        }
        out[start..].sort_by(f64::total_cmp);
    }

    /// First point strictly after `s` (with `s ≥ 0`), if it is `≤ horizon`.
    pub fn next_after(&self, s: f64, horizon: f64) -> Option<f64> {
        let mut b = (s.max(0.0) / self.block).floor() as u64;
        let mut buf = Vec::with_capacity(4);
        loop {
            let origin = b as f64 * self.block;
            if origin > horizon {
                return None;
            }
            buf.clear();
            self.block_points(b, &mut buf);
            if let Some(&t) = buf.iter().find(|&&t| t > s) {
                return (t <= horizon).then_some(t);
            }
            b += 1;
        }
    }

    /// All points in `[0, horizon]`, ascending.
    pub fn points(&self, horizon: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut b = 0u64;
        while (b as f64) * self.block <= horizon {
            self.block_points(b, &mut out);
            b += 1;
        }
        out.retain(|&t| t <= horizon);
        out
    }
}
