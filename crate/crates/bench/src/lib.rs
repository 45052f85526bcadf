//! Inputs shared by the criterion benchmarks in `benches/`.

use tropsdp_core::bench::{gen_random, GenSpec, RandomInstance};
use tropsdp_core::game::StochGame;

/// Seed used for every benchmark instance, so runs compare like for like.
pub const SEED: u64 = 2016;

pub fn instance(n: usize, m: usize) -> RandomInstance {
    gen_random(&GenSpec::new(n, m, SEED)).expect("valid sizes")
}

/// The materialized game of a random instance.
pub fn instance_game(n: usize, m: usize) -> StochGame {
    tropsdp_core::game_from_pencil(&instance(n, m).to_pencil()).expect("dense instances have a game")
}
