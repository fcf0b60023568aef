//! Stable seed derivation.
//!
//! Every random stream in the crate is keyed by `(master seed, purpose label, index)`
//! so that generating sample `i` never depends on how many samples came before it or
//! on which thread produced it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Per-sample channel draw (geometry, angles, delays).
pub const CHANNEL: &str = "channel";
/// Per-sample receiver noise during the pilot phase.
pub const PILOT_NOISE: &str = "pilot-noise";
/// Random-phase baseline.
pub const RANDOM_PHI: &str = "random-phi";
/// Network weight initialization.
pub const INIT: &str = "init";
/// Mini-batch shuffling.
pub const SHUFFLE: &str = "shuffle";

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a sub-seed from the master seed, a purpose label and an index.
pub fn derive(master: u64, label: &str, index: u64) -> u64 {
    let a = splitmix64(master ^ fnv1a(label.as_bytes()));
    splitmix64(a ^ splitmix64(index))
}

pub fn rng(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, label, index))
}
