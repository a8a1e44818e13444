//! Seeded, counter-based random streams.
//!
//! Every trial owns a ChaCha8 stream keyed by a seed derived from
//! `(master_seed, trial_id)`, so a trial's draws never depend on which worker
//! ran it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial_id` under `master_seed`. Reported in trial outputs so
/// one trial can be replayed on its own.
pub fn trial_seed(master_seed: u64, trial_id: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ trial_id.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn trial_stream(master_seed: u64, trial_id: u64) -> Stream {
    stream(trial_seed(master_seed, trial_id))
}
