//! Deterministic seed derivation.
//!
//! Experiments fan out over (algorithm, sample size, trial) grids, and each
//! cell must get a stream that is stable under re-running, re-ordering and
//! parallel scheduling. [`mix`] folds a master seed and the cell
//! coordinates into one 64-bit stream key with SplitMix64 finalization, so
//! neighbouring cells land far apart in the generator's state space.

/// Collapses a slice of words into one well-scrambled 64-bit seed.
///
/// The fold is sequential: order matters, so `mix(&[a, b])` and
/// `mix(&[b, a])` are unrelated. An empty slice maps to the scrambled
/// zero state rather than zero itself.
pub fn mix(parts: &[u64]) -> u64 {
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    for &part in parts {
        state = splitmix64(state ^ part);
    }
    splitmix64(state)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
