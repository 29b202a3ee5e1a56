//! Synthetic trial libraries for benchmarks.

use tunebench::rng::splitmix64;
use tunebench::{Direction, TrialLibrary};

/// `n` objectives in `[0, 1)` from a fixed splitmix64 sequence, with
/// roughly `ties` distinct values when `ties > 0`.
pub fn objectives(n: usize, seed: u64, ties: usize) -> Vec<f64> {
    let mut state = seed;
    (0..n)
        .map(|_| {
            state = splitmix64(state);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            if ties > 0 {
                (u * ties as f64).floor() / ties as f64
            } else {
                u
            }
        })
        .collect()
}

pub fn library(optimizer: &str, n: usize, seed: u64) -> TrialLibrary {
    TrialLibrary::from_objectives(optimizer, "bench", Direction::Minimize, &objectives(n, seed, 0))
        .expect("finite objectives")
}
