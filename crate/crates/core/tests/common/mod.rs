#![allow(dead_code)]

use proptest::prelude::*;
use qrev_core::hamiltonian::{HamiltonianSpec, Term};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random specs on `n_range` qubits with up to four terms.
pub fn arb_spec(n_range: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = HamiltonianSpec> {
    n_range.prop_flat_map(|n| {
        let term = (0..n, 0..n, 0.05f64..1.0, any::<bool>()).prop_filter("distinct qubits", |(i, j, _, _)| i != j);
        prop::collection::vec(term, 1..=4).prop_map(move |raw| {
            let total: f64 = raw.iter().map(|t| t.2).sum();
            let terms = raw
                .into_iter()
                .map(|(i, j, w, neg)| Term {
                    i: i.min(j),
                    j: i.max(j),
                    p: w / total,
                    s: if neg { -1 } else { 1 },
                })
                .collect();
            HamiltonianSpec::new(n, terms).expect("normalised weights")
        })
    })
}
