//! Deterministic, schedule-independent random streams.
//!
//! Every stochastic task (one dataset draw, one replication, one probe batch)
//! owns a ChaCha stream keyed by the experiment seed plus a list of integer
//! tags (dimension, replication index, role, ...). Streams are therefore
//! independent of thread count and execution order, which is what makes the
//! parallel and sequential execution paths byte-identical.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 step: a well-distributed 64-bit mixer used to fold tags into
/// key material.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent stream from a root seed and a tag path. Equal
/// `(seed, tags)` always yields the same stream; distinct tag paths yield
/// streams that are independent for all practical purposes.
pub fn stream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = seed ^ 0xA076_1D64_78BD_642F;
    for &tag in tags {
        // Fold each tag through the mixer so nearby tag values produce
        // unrelated key material and tag order matters.
        state = splitmix64(&mut state) ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Role tags used across the experiment harnesses, kept here so streams never
/// collide by accident.
pub mod role {
    pub const SVM_TRAIN: u64 = 1;
    pub const SVM_TEST: u64 = 2;
    pub const NN_TRAIN: u64 = 3;
    pub const NN_TEST: u64 = 4;
    pub const NN_INIT: u64 = 5;
    pub const NN_LIPSCHITZ: u64 = 6;
    pub const SVM_INIT: u64 = 7;
}
