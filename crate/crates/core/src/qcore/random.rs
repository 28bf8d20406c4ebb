//! Seeded random states, operators and channels for property tests and sweeps.

use rand::Rng;
use rand_distr::StandardNormal;

use super::channel::Channel;
use super::matrix::{ComplexMatrix, C64};
use super::state::{DensityMatrix, PureState};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state on `qubits` qubits.
pub fn random_pure<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> PureState {
    let amps = (0..1usize << qubits).map(|_| gaussian(rng)).collect();
    PureState::normalized(amps).expect("gaussian vector is nonzero")
}

/// Full-rank random mixed state (Hilbert–Schmidt measure).
pub fn random_density<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> DensityMatrix {
    let d = 1usize << qubits;
    let g = ComplexMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let m = &g * &g.adjoint();
    DensityMatrix::renormalized(qubits, m)
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    ComplexMatrix::from_fn(dim, dim, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5)
}

/// Random isometry with orthonormal columns (`rows ≥ cols`), via Gram–Schmidt.
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    assert!(rows >= cols);
    let mut columns: Vec<Vec<C64>> = Vec::with_capacity(cols);
    while columns.len() < cols {
        let mut v: Vec<C64> = (0..rows).map(|_| gaussian(rng)).collect();
        for u in &columns {
            let overlap: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= overlap * ui;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|z| *z /= norm);
            columns.push(v);
        }
    }
    ComplexMatrix::from_fn(rows, cols, |i, j| columns[j][i])
}

pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    random_isometry(dim, dim, rng)
}

/// Random channel from a Stinespring isometry with `kraus_count` environment levels.
///
/// Panics unless `2^output_qubits · kraus_count ≥ 2^input_qubits`.
pub fn random_channel<R: Rng + ?Sized>(
    input_qubits: usize,
    output_qubits: usize,
    kraus_count: usize,
    rng: &mut R,
) -> Channel {
    let din = 1usize << input_qubits;
    let dout = 1usize << output_qubits;
    let v = random_isometry(dout * kraus_count, din, rng);
    let kraus = (0..kraus_count)
        .map(|k| ComplexMatrix::from_fn(dout, din, |i, j| v[(k * dout + i, j)]))
        .collect();
    Channel::new(input_qubits, output_qubits, kraus).expect("isometry blocks are complete")
}

/// Effects of a random `outcomes`-element POVM, built from a random isometry.
pub fn random_povm_effects<R: Rng + ?Sized>(qubits: usize, outcomes: usize, rng: &mut R) -> Vec<ComplexMatrix> {
    let d = 1usize << qubits;
    let v = random_isometry(d * outcomes, d, rng);
    (0..outcomes)
        .map(|k| {
            let block = ComplexMatrix::from_fn(d, d, |i, j| v[(k * d + i, j)]);
            &block.adjoint() * &block
        })
        .collect()
}
