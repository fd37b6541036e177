//! Seedable, splittable random streams.
//!
//! Every stream is a ChaCha8 keystream selected by `(seed, stream id)`. The
//! keystream is counter based, so the n-th draw of a stream depends only on
//! the seed, the stream id and n. Simulations give each link and purpose its
//! own id; adding users therefore never perturbs the draws of existing links.

use rand::SeedableRng;
use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Packed into the 64-bit ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    PrimaryArrival,
    PrimaryGain,
    SecondaryAccess,
    SecondaryOwnGain,
    PrimaryToSecondaryGain,
    SecondaryToPrimaryGain,
    SecondaryCrossGain,
    ChannelSample,
    SolverStart,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::PrimaryArrival => 1,
            Purpose::PrimaryGain => 2,
            Purpose::SecondaryAccess => 3,
            Purpose::SecondaryOwnGain => 4,
            Purpose::PrimaryToSecondaryGain => 5,
            Purpose::SecondaryToPrimaryGain => 6,
            Purpose::SecondaryCrossGain => 7,
            Purpose::ChannelSample => 8,
            Purpose::SolverStart => 9,
        }
    }
}

/// Stream id layout: 8 bits purpose, 28 bits `a`, 28 bits `b`.
pub fn stream_id(purpose: Purpose, a: u64, b: u64) -> u64 {
    debug_assert!(a < 1 << 28 && b < 1 << 28);
    (purpose.tag() << 56) | ((a & 0x0fff_ffff) << 28) | (b & 0x0fff_ffff)
}

#[derive(Debug, Clone)]
pub struct Stream {
    inner: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64, purpose: Purpose, a: u64, b: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id(purpose, a, b));
        Stream { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        open01(self.next_u64())
    }

    /// Uniform on [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential with rate `rate` (mean `1/rate`).
    pub fn exponential(&mut self, rate: f64) -> f64 {
        exponential_from_bits(self.next_u64(), rate)
    }
}

/// Maps 64 random bits to the open interval (0, 1) using the top 52 bits;
/// with 53 the largest value would round up to 1.
pub fn open01(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Inverse-CDF exponential draw; the open-interval uniform avoids `ln(0)`.
pub fn exponential_from_bits(bits: u64, rate: f64) -> f64 {
    -open01(bits).ln() / rate
}

/// Derives an independent seed for sub-task `index` (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
