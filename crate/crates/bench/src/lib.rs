//! Shared fixtures for the criterion benches.

use qrev_core::qcore::random::{random_channel, random_density};
use qrev_core::{Channel, DensityMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two random `n`-qubit states.
pub fn state_pair(n: usize) -> (DensityMatrix, DensityMatrix) {
    let mut g = rng(n as u64);
    (random_density(n, &mut g), random_density(n, &mut g))
}

/// A random `n`-qubit channel with four Kraus operators.
pub fn channel(n: usize) -> Channel {
    random_channel(n, n, 4, &mut rng(100 + n as u64))
}
