//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 (the `rand_chacha`
//! implementation, 64-bit seed expanded by `seed_from_u64`). Independent
//! workers use the ChaCha stream id to split one seed into
//! non-overlapping sequences, so results never depend on how work is
//! scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Name and version recorded in result files.
pub const RNG_NAME: &str = "chacha8-v1";

pub type HuboRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> HuboRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `stream` of `seed`; streams of one seed never overlap.
pub fn stream(seed: u64, stream: u64) -> HuboRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw on the open interval (0, 1): the top 52 bits plus a half
/// step, so both endpoints are excluded exactly.
#[inline]
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Derives a child seed; used to separate stages, trials and instances.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer over the xor
    let mut z = (seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
