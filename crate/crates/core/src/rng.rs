//! Reproducible per-run random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent stream `index` under `seed_root`. Streams never overlap, so
/// run `k` of an ensemble is the same whatever else runs alongside it.
pub fn stream(seed_root: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_root);
    rng.set_stream(index);
    rng
}
