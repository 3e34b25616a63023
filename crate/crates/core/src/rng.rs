//! Counter-based seeding.
//!
//! Every random draw in a simulation comes from a ChaCha8 stream keyed by
//! `(master_seed, drop_index)` with the stream id selecting the purpose, so a
//! drop can be regenerated in isolation and parallel runs match serial ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use num_complex::Complex64;

/// What a random stream is used for. The discriminant is the ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Geometry = 1,
    DirectChannel = 2,
    ForwardChannel = 3,
    TagReaderChannel = 4,
    ReaderPilotNoise = 5,
    ApPilotNoise = 6,
    RandomBeamformer = 7,
    Misc = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for drop `drop` of a run keyed by `master`.
pub fn drop_seed(master: u64, drop: u64) -> u64 {
    splitmix64(splitmix64(master) ^ drop.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Independent RNG for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// RNG for a sub-stream with an extra index (e.g. one pilot slot per AP).
pub fn indexed_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    stream_rng(splitmix64(seed ^ splitmix64(index.wrapping_add(0x5851_F42D))), stream)
}

/// Circularly-symmetric standard complex normal, E|z|^2 = 1.
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
