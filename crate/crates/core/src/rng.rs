//! Counter-based random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream addressed by
//! `(seed, stream)`. Work split into blocks gives block `b` its own stream,
//! so serial and parallel runs produce identical bits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags separating independent uses of one user seed.
pub mod tags {
    pub const SAMPLES: u64 = 0x01;
    pub const SAA: u64 = 0x02;
    pub const OUTER: u64 = 0x03;
    pub const BOOTSTRAP: u64 = 0x04;
    pub const STARTS: u64 = 0x05;
    pub const CANDIDATES: u64 = 0x06;
    pub const VOLUME: u64 = 0x07;
    pub const COVARIANCE: u64 = 0x08;
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed; distinct `(seed, index)` pairs give unrelated seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_mul(0xD6E8_FEB8_6659_FD93).wrapping_add(1)))
}

/// Generator for block `block` of the stream keyed by `seed`.
pub fn stream(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}
