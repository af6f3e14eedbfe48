//! Randomness streams.
//!
//! Every stochastic operation takes an explicit `&mut impl Rng`. Reproducible
//! runs use [`stream`], which maps a `(seed, stream index)` pair onto a
//! ChaCha20 generator: the 64-bit seed is expanded with
//! `ChaCha20Rng::seed_from_u64` and the index selects the ChaCha stream
//! (nonce). ChaCha20 is a counter-based generator, so the mapping is fixed by
//! the cipher definition and does not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

/// Independent generator for trial `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
