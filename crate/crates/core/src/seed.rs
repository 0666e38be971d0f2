//! Seed derivation. Every random stream in the crate is derived from one
//! master seed with [`derive_seed`], so any run can be regenerated from the
//! master seed plus its index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keep the environment, policies and trainers on disjoint
/// sequences even when they share a run index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Environment = 1,
    Policy = 2,
    Trainer = 3,
    Evaluation = 4,
    Oracle = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(master ^ tag·φ) ^ index)`.
pub fn derive_seed(master: u64, tag: Stream, index: u64) -> u64 {
    let tagged = master ^ (tag as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    splitmix64(splitmix64(tagged) ^ index)
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
