//! Named random streams.
//!
//! Every stochastic component draws from its own ChaCha8 stream. A stream is
//! keyed by the run seed and a label: the seed fixes the ChaCha key and the
//! FNV-1a hash of the label selects the ChaCha stream id. Adding a new label
//! never changes the numbers produced by existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const GRAPH_INIT: &str = "graph-init";
pub const DYNAMICS: &str = "dynamics";
pub const INPUTS: &str = "inputs";
pub const NOISE: &str = "noise";

/// 64-bit FNV-1a.
pub fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn stream(seed: u64, label: &str) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label_hash(label));
    rng
}
