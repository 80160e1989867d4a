//! Deterministic random streams.
//!
//! Every stochastic step draws from a ChaCha8 generator seeded from
//! `(master_seed, client, round, purpose)`. A client's stream never depends
//! on what other clients do, so results are independent of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a stream is used for; part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Data = 1,
    Split = 2,
    Partition = 3,
    Init = 4,
    Train = 5,
    LabelFlip = 6,
    Noise = 7,
    Crafted = 8,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream for `(seed, client, round, purpose)`. Use `u64::MAX` for "not
/// applicable" coordinates.
pub fn stream(seed: u64, client: u64, round: u64, purpose: Purpose) -> SimRng {
    let mut h = splitmix(seed);
    for part in [client, round, purpose as u64] {
        h = splitmix(h ^ part);
    }
    ChaCha8Rng::seed_from_u64(h)
}

pub fn global_stream(seed: u64, purpose: Purpose) -> SimRng {
    stream(seed, u64::MAX, u64::MAX, purpose)
}
