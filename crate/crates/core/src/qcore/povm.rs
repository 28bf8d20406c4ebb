//! Labeled POVMs with exact outcome distributions and sampled measurement.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::eig::hermitian_eig;
use super::gates;
use super::matrix::ComplexMatrix;
use super::state::{qubits_for_dim, DensityMatrix, PureState};
use crate::error::{Error, Result};

pub const POVM_TOL: f64 = 1e-8;
/// Outcomes with probability below this are never sampled.
pub const MIN_BRANCH_PROB: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Effect {
    pub label: usize,
    pub operator: ComplexMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Effect>", into = "Vec<Effect>")]
pub struct Povm {
    qubits: usize,
    effects: Vec<Effect>,
}

impl TryFrom<Vec<Effect>> for Povm {
    type Error = Error;

    fn try_from(effects: Vec<Effect>) -> Result<Self> {
        Povm::new(effects)
    }
}

impl From<Povm> for Vec<Effect> {
    fn from(p: Povm) -> Self {
        p.effects
    }
}

impl Povm {
    pub fn new(effects: Vec<Effect>) -> Result<Self> {
        let first = effects.first().ok_or_else(|| Error::InvalidPovm("no effects".into()))?;
        let d = first.operator.rows();
        let qubits = qubits_for_dim(d).ok_or_else(|| Error::InvalidPovm(format!("effect dimension {d} is not 2^n")))?;
        let mut total = ComplexMatrix::zeros(d, d);
        let mut seen = std::collections::HashSet::new();
        for e in &effects {
            if e.operator.rows() != d || e.operator.cols() != d {
                return Err(Error::InvalidPovm(format!("effect {} has wrong shape", e.label)));
            }
            if !seen.insert(e.label) {
                return Err(Error::InvalidPovm(format!("duplicate label {}", e.label)));
            }
            e.operator.check_finite()?;
            if !e.operator.is_hermitian(POVM_TOL) {
                return Err(Error::InvalidPovm(format!("effect {} not Hermitian", e.label)));
            }
            let min = hermitian_eig(&e.operator)?.values[0];
            if min < -POVM_TOL {
                return Err(Error::InvalidPovm(format!(
                    "effect {} has eigenvalue {min:.3e}",
                    e.label
                )));
            }
            total = &total + &e.operator;
        }
        let err = (&total - &ComplexMatrix::identity(d)).max_abs();
        if err > POVM_TOL {
            return Err(Error::InvalidPovm(format!(
                "effects sum to identity only within {err:.3e}"
            )));
        }
        Ok(Self { qubits, effects })
    }

    /// Effects labeled by their position.
    pub fn from_operators(ops: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(
            ops.into_iter()
                .enumerate()
                .map(|(label, operator)| Effect { label, operator })
                .collect(),
        )
    }

    /// Rank-one effects from an orthonormal basis, labeled by position.
    pub fn from_basis(basis: &[Vec<super::matrix::C64>]) -> Result<Self> {
        Self::from_operators(basis.iter().map(|v| ComplexMatrix::projector(v)).collect())
    }

    /// Computational-basis measurement; label is the basis index.
    pub fn computational(qubits: usize) -> Self {
        let d = 1usize << qubits;
        let effects = (0..d)
            .map(|z| {
                let mut p = ComplexMatrix::zeros(d, d);
                p[(z, z)] = super::matrix::ONE;
                Effect { label: z, operator: p }
            })
            .collect();
        Self { qubits, effects }
    }

    /// Two-qubit Bell measurement. Label `2x + z` marks `(I ⊗ X^x Z^z)|Φ+⟩`.
    pub fn bell() -> Self {
        let phi = PureState::phi_plus();
        let effects = (0..4)
            .map(|label| {
                let (x, z) = (label & 2 != 0, label & 1 != 0);
                let op = ComplexMatrix::identity(2).kron(&gates::pauli_xz(x, z));
                let v = op.apply(phi.amplitudes()).expect("4-dim");
                Effect {
                    label,
                    operator: ComplexMatrix::projector(&v),
                }
            })
            .collect();
        Self { qubits: 2, effects }
    }

    #[inline]
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// Born probabilities in effect order, clamped at zero.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<(usize, f64)>> {
        if rho.qubits() != self.qubits {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit POVM on {}-qubit state",
                self.qubits,
                rho.qubits()
            )));
        }
        Ok(self
            .effects
            .iter()
            .map(|e| (e.label, e.operator.trace_product_re(rho.matrix()).max(0.0)))
            .collect())
    }

    /// Samples an outcome and returns the Lüders post-state `√Π ρ √Π / p`.
    pub fn measure<R: Rng + ?Sized>(&self, rho: &DensityMatrix, rng: &mut R) -> Result<(usize, DensityMatrix)> {
        let probs = self.probabilities(rho)?;
        let idx = sample_index(&probs.iter().map(|p| p.1).collect::<Vec<_>>(), rng)?;
        let (label, p) = probs[idx];
        let root = hermitian_eig(&self.effects[idx].operator)?.map_spectrum(|l| l.max(0.0).sqrt());
        let post = root.sandwich(rho.matrix()).scale_re(1.0 / p);
        Ok((label, DensityMatrix::renormalized(rho.qubits(), post)))
    }
}

/// Draws an index proportional to `weights`, skipping entries below
/// [`MIN_BRANCH_PROB`].
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let total: f64 = weights.iter().filter(|&&w| w >= MIN_BRANCH_PROB).sum();
    if total < MIN_BRANCH_PROB {
        return Err(Error::DegenerateDistribution(total));
    }
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w < MIN_BRANCH_PROB {
            continue;
        }
        last = i;
        if u < w {
            return Ok(i);
        }
        u -= w;
    }
    Ok(last)
}
