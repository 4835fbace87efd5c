//! Seed derivation.
//!
//! Every stochastic operation takes an explicit 64-bit seed. Child seeds are
//! derived by mixing a parent seed with a label through SplitMix64, and the
//! resulting seed keys a ChaCha8 stream. Concurrent workers therefore never
//! share generator state, and results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of child stream `label` from `parent`.
pub fn derive(parent: u64, label: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ label.wrapping_mul(GOLDEN).rotate_left(17))
}

/// Derives a seed through a path of labels.
pub fn derive_path(parent: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(parent, |s, &l| derive(s, l))
}

/// Opens a generator keyed by `seed`.
pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// Stream labels for the distinct consumers of a trial seed.
pub(crate) const LABEL_DATA: u64 = 0xD47A;
pub(crate) const LABEL_NOISE: u64 = 0x4015E;
