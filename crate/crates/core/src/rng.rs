//! Seed derivation and per-purpose random streams.
//!
//! Every Monte Carlo task derives its own seed from the experiment's master
//! seed and its grid coordinates, so results never depend on scheduling.
//! Within a session, independent ChaCha streams feed the information bits,
//! channel gains, forward noise and feedback noise. Modes that consume a
//! different number of draws from one stream therefore still see identical
//! draws from the others, which keeps paired comparisons paired.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a sequence of coordinates into a seed.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(mix64(master), |acc, &c| mix64(acc ^ mix64(c)))
}

/// Draws one sample of CN(0, var): two independent real normals of variance var/2.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Bits = 1,
    Gains = 2,
    ForwardNoise = 3,
    FeedbackNoise = 4,
    Codebook = 5,
}

/// The set of independent streams owned by one session.
#[derive(Clone, Debug)]
pub struct SessionRng {
    pub bits: ChaCha8Rng,
    pub gains: ChaCha8Rng,
    pub forward_noise: ChaCha8Rng,
    pub feedback_noise: ChaCha8Rng,
}

impl SessionRng {
    pub fn new(seed: u64) -> Self {
        Self {
            bits: stream(seed, Stream::Bits),
            gains: stream(seed, Stream::Gains),
            forward_noise: stream(seed, Stream::ForwardNoise),
            feedback_noise: stream(seed, Stream::FeedbackNoise),
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
