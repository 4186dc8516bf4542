//! Counter-based deterministic random number generation.
//!
//! Channel noise, fading draws and test-instance generation all need to be
//! bitwise reproducible across platforms and independent of draw order. A
//! counter-based generator gives that for free: the k-th draw of stream s is
//! a pure function of `(seed, s, k)`, so concurrent consumers can skip to any
//! position without sharing state.


#[allow(unused_imports)] // no_std float math; test builds link std and shadow the trait
use num_traits::Float;

/// SplitMix64 finalizer. Passes BigCrush as the mixing stage of SplitMix64;
/// used here to hash a (seed, stream, counter) triple into 64 uniform bits.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A stateless counter-based generator.
///
/// `stream` partitions draws by purpose (e.g. one stream per token) so that
/// adding draws to one consumer never shifts another consumer's sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Raw 64 uniform bits for draw `counter` of `stream`.
    pub fn bits(&self, stream: u64, counter: u64) -> u64 {
        // Golden-ratio increments decorrelate the three lanes before mixing.
        let a = mix64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        let b = mix64(stream.wrapping_add(0xd1b5_4a32_d192_ed03));
        mix64(a ^ b.wrapping_add(counter.wrapping_mul(0x2545_f491_4f6c_dd1d)))
    }

    /// Uniform draw in the half-open interval [0, 1).
    pub fn uniform(&self, stream: u64, counter: u64) -> f64 {
        // 53 high bits -> exactly representable dyadic rational in [0,1).
        (self.bits(stream, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in the open interval (0, 1]; safe as a log argument.
    pub fn uniform_open(&self, stream: u64, counter: u64) -> f64 {
        ((self.bits(stream, counter) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// A pair of independent standard normal draws via Box-Muller.
    ///
    /// Consumes counters `2*index` and `2*index + 1` of the stream.
    pub fn normal_pair(&self, stream: u64, index: u64) -> (f64, f64) {
        let u1 = self.uniform_open(stream, 2 * index);
        let u2 = self.uniform(stream, 2 * index + 1);
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * core::f64::consts::PI * u2;
        (radius * angle.cos(), radius * angle.sin())
    }

    /// Uniform integer in [0, bound) by rejection-free scaling (bound <= 2^32
    /// keeps the modulo bias below 2^-32, negligible for simulation use).
    pub fn below(&self, stream: u64, counter: u64, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.bits(stream, counter) % bound
    }
}

/// Stable 64-bit hash of a byte string (FNV-1a). Used to derive per-token
/// streams from surface strings.
pub fn hash_bytes(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
