//! Reproducible random streams.
//!
//! Every replicate draws from its own ChaCha8 stream, keyed by the master seed,
//! a stream tag (experiment / scale) and the replicate index. Results therefore
//! do not depend on how replicates are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Counter-based random source handed to every sampler.
pub type RandomSource = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Source for `replicate` within the stream family `tag` of `master_seed`.
pub fn replicate_rng(master_seed: u64, tag: u64, replicate: u64) -> RandomSource {
    let key = splitmix64(master_seed ^ splitmix64(tag.wrapping_add(0x5EED)));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(replicate);
    rng
}

/// Source seeded from a single integer, for one-off runs.
pub fn seeded(seed: u64) -> RandomSource {
    replicate_rng(seed, 0, 0)
}
