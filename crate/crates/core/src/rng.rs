//! Seed fan-out.
//!
//! A root seed `s` and a counter `i` select the generator
//! `ChaCha8Rng::seed_from_u64(s)` positioned on stream `i`. Streams are
//! independent keystreams of the same key, so the draw for sample `i` does
//! not depend on how many other samples were generated before it or on which
//! thread generated them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type LabRng = ChaCha8Rng;

/// Generator for sub-stream `index` of `root`.
pub fn stream(root: u64, index: u64) -> LabRng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(index);
    rng
}

/// Derives a child root seed, for nesting fan-outs (sample `i`, component `j`).
pub fn child_seed(root: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream(root, index).next_u64()
}
