//! Seedable, portable randomness.
//!
//! All stochastic steps (negative sampling, parameter init, fabrication)
//! draw from ChaCha8 streams seeded through a splitmix64 chain, so a run is
//! a pure function of its configured seeds regardless of thread count,
//! platform, or iteration order.

use rand::Rng;
use rand::SeedableRng;

/// The stream generator used everywhere randomness is needed.
pub type Stream = rand_chacha::ChaCha8Rng;

/// splitmix64 step; the standard finalizer from Steele et al.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a root seed and a path of
/// indices (e.g. `[silo, table, column]`). Deterministic and
/// collision-resistant enough for experiment bookkeeping.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    let mut state = root ^ 0x51_7c_c1_b7_27_22_0a_95;
    let mut out = splitmix64(&mut state);
    for &p in path {
        state ^= p.wrapping_mul(0xff51afd7ed558ccd);
        out = splitmix64(&mut state);
    }
    out
}

/// A ChaCha8 stream for the given derived seed.
pub fn stream(root: u64, path: &[u64]) -> Stream {
    Stream::seed_from_u64(derive_seed(root, path))
}

/// Uniformly samples `k` distinct elements from `candidates` without
/// replacement via a partial Fisher-Yates shuffle. The candidate order is
/// part of the contract: callers pass canonically sorted lists so the
/// draw is reproducible. Returns fewer than `k` only if the candidate
/// list is shorter than `k`.
pub fn sample_without_replacement<T: Copy>(
    candidates: &[T],
    k: usize,
    rng: &mut Stream,
) -> Vec<T> {
    let mut pool: Vec<T> = candidates.to_vec();
    let take = k.min(pool.len());
    for i in 0..take {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(take);
    pool
}
