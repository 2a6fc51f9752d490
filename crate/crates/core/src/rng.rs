//! Named, seed-derived random substreams.
//!
//! Every consumer of randomness asks for its own stream keyed by
//! `(root seed, purpose, ids)`. Streams never share state, so the order in
//! which components draw cannot perturb one another, and a baseline run and
//! a dynamic run built from the same root seed see identical geometry,
//! shadowing and fading.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

/// Derives a deterministic RNG for `purpose` and the given ids.
pub fn substream(root: u64, purpose: &str, ids: &[u64]) -> SimRng {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update((purpose.len() as u64).to_le_bytes());
    hasher.update(purpose.as_bytes());
    for id in ids {
        hasher.update(id.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(seed)
}
