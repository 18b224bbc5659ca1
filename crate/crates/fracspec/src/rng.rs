//! Deterministic random-number plumbing.
//!
//! One master 64-bit seed drives every experiment. Per-replication (and
//! per-cell) streams are derived with the SplitMix64 finalizer, a published
//! 64-bit mixing function, so serial and parallel runs agree bit for bit.
//! The generators themselves are ChaCha8 streams: counter-based, splittable,
//! and platform-independent.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Golden-gamma increment from the SplitMix64 reference implementation.
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function: advances `state` by the golden gamma and
/// returns the mixed value (Steele, Lea & Flood's published constants).
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `(master, index)`.
///
/// Equivalent to seeding SplitMix64 at `master` and jumping ahead `index + 1`
/// steps before taking one output, so distinct indices give distinct,
/// well-mixed streams and `derive_seed(m, i)` never equals `m` in practice.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut state = master.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index));
    splitmix64(&mut state)
}

/// A seeded ChaCha8 generator for the given derived seed.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A seeded ChaCha8 generator positioned on an independent sub-stream.
///
/// Used for batched Monte Carlo draws: batch `b` of a computation seeded by
/// `seed` is deterministic given `(seed, b)` and independent of how batches
/// are scheduled across workers.
pub fn batch_stream(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}
