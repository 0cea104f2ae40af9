//! Named random sub-streams derived from one root seed.
//!
//! Each consumer (dataset generation, k-means seeding, isolation forest)
//! draws from its own ChaCha stream, so adding a method or changing how
//! many numbers one consumer draws never shifts another's sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DATASET: &str = "dataset";
pub const KMEANS: &str = "kmeans";
pub const IFOREST: &str = "iforest";

/// FNV-1a, used only to turn a stream name into a stable stream id.
fn stream_id(name: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in name.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

/// Generator for the named sub-stream of `root`.
pub fn substream(root: u64, name: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(stream_id(name));
    rng
}

/// A 64-bit seed for the named sub-stream, for configs that carry a plain seed.
pub fn derive_seed(root: u64, name: &str) -> u64 {
    use rand::RngCore;
    substream(root, name).next_u64()
}
