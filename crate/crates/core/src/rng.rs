//! Deterministic RNG substreams.
//!
//! One 64-bit master seed fans out into independent per-link substreams so
//! that a run is reproducible bit-for-bit and so that two policy variants
//! sharing a seed consume channel, arrival, and protocol randomness from
//! separate streams (common random numbers stay aligned across variants).

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifies one substream of a run's randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamId {
    /// Backoff and transmission-duration draws of one link.
    Channel(usize),
    /// Arrival process of one link.
    Arrival(usize),
    /// Busy-tone jitter and rejoin delays of one link.
    Tone(usize),
    /// Random-geometric node placement.
    Topology,
}

impl StreamId {
    fn tag(self) -> u64 {
        let (domain, link) = match self {
            StreamId::Channel(l) => (1u64, l as u64),
            StreamId::Arrival(l) => (2, l as u64),
            StreamId::Tone(l) => (3, l as u64),
            StreamId::Topology => (4, 0),
        };
        (domain << 48) ^ link
    }
}

/// Family of substreams derived from a master seed.
#[derive(Clone, Copy, Debug)]
pub struct RngStreams {
    master: u64,
}

impl RngStreams {
    pub fn new(master: u64) -> Self {
        RngStreams { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Derive the substream for `id`. Repeated calls return identical
    /// generators.
    pub fn stream(&self, id: StreamId) -> ChaCha8Rng {
        let mut state = self.master ^ id.tag().wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
