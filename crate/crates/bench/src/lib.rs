//! Shared inputs for the criterion benches under `benches/`.

pub use orsearch_core::*;

use orsearch_core::benchmark::build_fixtures;
use orsearch_core::synth::{generate, Family};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A fixed synthetic model per family.
pub fn sample_models() -> Vec<(Family, StructuredModel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    Family::ALL
        .into_iter()
        .map(|f| (f, generate(f, &mut rng).model))
        .collect()
}

pub fn sample_fixtures(n: usize) -> Vec<Fixture> {
    build_fixtures(n, 42, 4).expect("fixtures build")
}
