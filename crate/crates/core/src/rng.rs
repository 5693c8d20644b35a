//! Counter-based random streams.
//!
//! Every parallel work item draws from its own ChaCha stream keyed by
//! `(seed, stream id)`, so results do not depend on the thread count or on
//! scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream ids are namespaced per consumer so that two consumers sharing a
/// seed never share random numbers.
pub mod purpose {
    pub const CUBE: u64 = 1;
    pub const LINE: u64 = 2;
    pub const PLANE: u64 = 3;
    pub const IFS: u64 = 4;
    pub const FROSTMAN: u64 = 5 << 32;
    pub const ZDELTA: u64 = 6 << 32;
    pub const TRANSVERSALITY: u64 = 7 << 32;
    pub const COVER: u64 = 8 << 32;
    pub const INCIDENCE: u64 = 9 << 32;
    pub const SUBSAMPLE: u64 = 10 << 32;
    pub const IDENTITIES: u64 = 11 << 32;
}

pub fn stream(seed: u64, id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
