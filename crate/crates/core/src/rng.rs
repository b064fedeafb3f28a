//! Counter-keyed random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream whose key is built
//! from `(seed, domain, lane)` and whose 64-bit stream id is the replicate
//! index. Replicate `b` therefore sees the same numbers no matter which
//! worker runs it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Separates the stream families so that, for example, network replicate 7
/// and claim path 7 never share numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Network,
    Configuration,
    Claims,
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::Network => 0x6e65_7477,
            Domain::Configuration => 0x636f_6e66,
            Domain::Claims => 0x636c_6169,
        }
    }
}

/// Stream for replicate `index` of `domain`, sub-keyed by `lane`.
pub fn stream(seed: u64, domain: Domain, lane: u64, index: u64) -> Stream {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.tag().to_le_bytes());
    key[16..24].copy_from_slice(&lane.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Network replicate stream: fresh types and edges for replicate `b`.
pub fn network_stream(seed: u64, b: u64) -> Stream {
    stream(seed, Domain::Network, 0, b)
}
