//! Seeded RNG substreams.
//!
//! Every random draw in the crate comes from `substream(master, path)`, so a
//! result depends only on the master seed and the logical index of the work
//! item, never on which worker thread ran it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic RNG for `(master, path[0], path[1], ...)`.
pub fn substream(master: u64, path: &[u64]) -> SimRng {
    let mut state = master;
    let mut h = splitmix64(&mut state);
    for &p in path {
        state ^= p.wrapping_mul(0xD6E8_FEB8_6659_FD93).wrapping_add(h);
        h = splitmix64(&mut state);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// A scalar seed derived from a substream, for handing to components that
/// take a plain `u64` seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    use rand::RngCore;
    substream(master, path).next_u64()
}
