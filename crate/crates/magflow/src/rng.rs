//! Deterministic per-index random streams.
//!
//! Every Monte-Carlo sample with index `i` draws from its own ChaCha stream
//! derived from `(seed, i)`. A sample is therefore a pure function of the
//! seed and its index, which makes results independent of worker count and
//! of the order in which shards run.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream for sample `index` under `seed`.
pub fn index_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
