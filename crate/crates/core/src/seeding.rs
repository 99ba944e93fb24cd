//! Deterministic derivation of independent random substreams from one user
//! seed: replicates, restarts, splits, and grid evaluations each get their
//! own generator so results are identical regardless of execution order or
//! parallelism.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Mix a base seed with a sequence of tags (splitmix64 finalizer per step).
pub fn derive(base: u64, tags: &[u64]) -> u64 {
    let mut state = base ^ 0xD6E8_FEB8_6659_FD93;
    for &t in tags {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(t);
        state = (state ^ (state >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        state = (state ^ (state >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        state ^= state >> 31;
    }
    state
}

/// Seeded generator for the substream identified by the tags.
pub fn rng(base: u64, tags: &[u64]) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(derive(base, tags))
}
