//! Deterministic seed derivation.
//!
//! Every stochastic routine in this crate receives an explicit seed and
//! derives independent streams for sub-tasks (environments, replicas, paths)
//! by hashing `(root, domain, index)` with SplitMix64 steps.  Streams are
//! keyed by index, not by draw order, so work can be farmed out to any number
//! of threads and still reproduce the sequential results bit for bit.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One SplitMix64 scramble: advances `state` by the Weyl constant and returns
/// the mixed output.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a root seed, a domain tag, and an index.
/// Distinct `(domain, index)` pairs give statistically independent seeds.
pub fn derive_seed(root: u64, domain: u64, index: u64) -> u64 {
    let mut state = root;
    let a = splitmix64(&mut state);
    state ^= domain.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let b = splitmix64(&mut state);
    state ^= index.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    let c = splitmix64(&mut state);
    a ^ b.rotate_left(17) ^ c
}

/// Domain tags used by this crate to keep derived streams disjoint.
pub mod domain {
    pub const ENVIRONMENT: u64 = 1;
    pub const POTENTIAL_PATH: u64 = 2;
    pub const REPLICA: u64 = 3;
    pub const BM_PATH: u64 = 4;
}

/// Builds the generator for one derived stream.
pub fn stream_rng(root: u64, domain: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, domain, index))
}
