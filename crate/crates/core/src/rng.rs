//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! 64-bit seed and a 64-bit stream id. Distinct stream ids give independent
//! sequences, so each time step, chain and repetition can own its stream and
//! runs replay bit-identically on any platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream-id namespaces. The upper 16 bits carry the purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    PriorDraw = 1,
    Chain = 2,
    KMeans = 3,
    StudentNorm = 4,
    DataGen = 5,
    Oracle = 6,
}

pub fn seeded_rng(seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

pub fn stream_id(purpose: Purpose, index: u64) -> u64 {
    ((purpose as u64) << 48) | (index & 0xFFFF_FFFF_FFFF)
}

pub fn purpose_rng(seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    seeded_rng(seed, stream_id(purpose, index))
}

/// SplitMix64 finalizer, used to derive per-repetition seeds from a base seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
