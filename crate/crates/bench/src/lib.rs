//! Seeded inputs shared by the criterion benches.

use stackel_core::exact::Q;
use stackel_core::game::Game;
use stackel_core::harness::{generate_family, Family};

/// `count` random `m × n` games with consecutive seeds starting at `seed`.
pub fn corpus(seed: u64, count: usize, m: usize, n: usize, denom: i64) -> Vec<Game> {
    (0..count as u64)
        .map(|k| generate_family(seed + k, m, n, denom, Family::Random))
        .collect()
}

/// Rationals with numerator and denominator near `2^bits`, for search benches.
pub fn search_targets(bits: u32, count: i64) -> Vec<Q> {
    let base = 1i64 << bits;
    (1..=count)
        .map(|k| Q::new((base - 7 * k).into(), (base - 3 * k + 1).into()))
        .collect()
}
