//! Counter-based random numbers.
//!
//! The generator is SplitMix64 used in counter mode: the `i`-th 64-bit word
//! of a stream with key `key` is
//!
//! ```text
//! z = key + (i + 1) * 0x9E37_79B9_7F4A_7C15   (wrapping)
//! z = (z ^ (z >> 30)) * 0xBF58_476D_1CE4_E5B9
//! z = (z ^ (z >> 27)) * 0x94D0_49BB_1331_11EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! which is bit-identical to the `i`-th output of a sequential SplitMix64
//! seeded with `key`. Any word is addressable without generating the ones
//! before it, so sampling loops can be split across threads freely.
//!
//! Uniform doubles take the top 53 bits. Standard normals use Box–Muller on
//! the word pair `(2p, 2p + 1)`: element `2p` is the cosine branch, element
//! `2p + 1` the sine branch, with `u1` mapped into `(0, 1]` so the log is
//! always finite.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for an independent stream named by `tag`, e.g. one per dimension
/// of a sweep: `mix64(seed ^ mix64(tag + golden))`.
pub fn split_seed(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag.wrapping_add(GOLDEN)))
}

/// A keyed, stateless random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { key: seed }
    }

    /// Independent stream derived with [`split_seed`].
    pub fn substream(&self, tag: u64) -> Self {
        Self {
            key: split_seed(self.key, tag),
        }
    }

    #[inline]
    pub fn word(&self, counter: u64) -> u64 {
        mix64(self.key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn uniform(&self, counter: u64) -> f64 {
        (self.word(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)` by widening multiply. The bias is at
    /// most `bound / 2^64`, far below anything the samplers here can see.
    #[inline]
    pub fn below(&self, counter: u64, bound: u64) -> u64 {
        ((self.word(counter) as u128 * bound as u128) >> 64) as u64
    }

    /// Standard normal for element `index` of the stream.
    #[inline]
    pub fn normal(&self, index: u64) -> f64 {
        let pair = index / 2;
        let u1 = 1.0 - self.uniform(2 * pair);
        let u2 = self.uniform(2 * pair + 1);
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        if index.is_multiple_of(2) {
            radius * angle.cos()
        } else {
            radius * angle.sin()
        }
    }
}
