//! The crate's single pseudo-random generator.
//!
//! All randomness goes through ChaCha8 seeded with `seed_from_u64`, which is
//! portable across platforms. Work that fans out (per-document dropout during
//! a parallel training step) receives child seeds drawn from the parent
//! generator in a fixed order before the fan-out.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws `n` child seeds from `rng`.
pub fn child_seeds(rng: &mut SeededRng, n: usize) -> Vec<u64> {
    (0..n).map(|_| rng.next_u64()).collect()
}
