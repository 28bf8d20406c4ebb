//! Pure states and density matrices on `n` qubits.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::eig::{eigvalsh, hermitian_eig};
use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

pub const PURE_QUBIT_CAP: usize = 16;
pub const DENSITY_QUBIT_CAP: usize = 8;

pub const NORM_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-8;

pub(crate) fn qubits_for_dim(dim: usize) -> Option<usize> {
    if dim.is_power_of_two() {
        Some(dim.trailing_zeros() as usize)
    } else {
        None
    }
}

/// A normalized state vector on `n` qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct PureState {
    qubits: usize,
    amps: Vec<C64>,
}

impl TryFrom<Vec<[f64; 2]>> for PureState {
    type Error = Error;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        PureState::new(v.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

impl From<PureState> for Vec<[f64; 2]> {
    fn from(s: PureState) -> Self {
        s.amps.iter().map(|z| [z.re, z.im]).collect()
    }
}

impl PureState {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let qubits = qubits_for_dim(amps.len())
            .ok_or_else(|| Error::InvalidState(format!("length {} is not a power of two", amps.len())))?;
        if qubits > PURE_QUBIT_CAP {
            return Err(Error::DimensionCap {
                what: "pure-state qubits",
                got: qubits,
                cap: PURE_QUBIT_CAP,
            });
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm2: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm2} != 1")));
        }
        Ok(Self { qubits, amps })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        for z in &mut amps {
            *z /= norm;
        }
        Self::new(amps)
    }

    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << qubits;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, qubits });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self::new(amps)
    }

    /// Computational basis state `|b_0 b_1 …⟩`, `b_0` most significant.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        Self::basis(bits.len(), index)
    }

    pub fn zero(qubits: usize) -> Result<Self> {
        Self::basis(qubits, 0)
    }

    /// `|+⟩^{⊗n}`.
    pub fn plus(qubits: usize) -> Result<Self> {
        let dim = 1usize << qubits;
        Self::new(vec![C64::new(1.0 / (dim as f64).sqrt(), 0.0); dim])
    }

    /// `(|00⟩ + |11⟩)/√2`.
    pub fn phi_plus() -> Self {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        Self {
            qubits: 2,
            amps: vec![s, ZERO, ZERO, s],
        }
    }

    pub fn single(amps: [C64; 2]) -> Result<Self> {
        Self::new(amps.to_vec())
    }

    #[inline]
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self::new(amps)
    }

    pub fn tensor_all<'a>(parts: impl IntoIterator<Item = &'a PureState>) -> Result<Self> {
        let mut acc = Self {
            qubits: 0,
            amps: vec![ONE],
        };
        for p in parts {
            acc = acc.tensor(p)?;
        }
        Ok(acc)
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "inner product of {} and {} qubits",
                self.qubits, other.qubits
            )));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²`; insensitive to global phase.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        self.inner(other).map(|z| z.norm_sqr())
    }

    fn check_target(&self, q: usize) -> Result<()> {
        if q >= self.qubits {
            Err(Error::IndexOutOfRange {
                index: q,
                qubits: self.qubits,
            })
        } else {
            Ok(())
        }
    }

    /// Applies a 2×2 unitary to qubit `target` in place.
    pub fn apply_1q(&mut self, gate: &ComplexMatrix, target: usize) -> Result<()> {
        self.check_target(target)?;
        if gate.rows() != 2 || gate.cols() != 2 {
            return Err(Error::DimensionMismatch("single-qubit gate must be 2x2".into()));
        }
        let stride = 1usize << (self.qubits - 1 - target);
        let (g00, g01, g10, g11) = (gate[(0, 0)], gate[(0, 1)], gate[(1, 0)], gate[(1, 1)]);
        for base in 0..self.dim() {
            if base & stride != 0 {
                continue;
            }
            let a0 = self.amps[base];
            let a1 = self.amps[base | stride];
            self.amps[base] = g00 * a0 + g01 * a1;
            self.amps[base | stride] = g10 * a0 + g11 * a1;
        }
        Ok(())
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_target(a)?;
        self.check_target(b)?;
        let ma = 1usize << (self.qubits - 1 - a);
        let mb = 1usize << (self.qubits - 1 - b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & ma != 0 && i & mb != 0 {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    /// Applies a full-register unitary.
    pub fn apply_unitary(&self, u: &ComplexMatrix) -> Result<Self> {
        Self::normalized(u.apply(&self.amps)?)
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        check_density_cap(self.qubits)?;
        Ok(DensityMatrix::from_trusted(
            self.qubits,
            ComplexMatrix::projector(&self.amps),
        ))
    }

    /// Reduced density matrix on `keep` computed directly from the amplitudes.
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep = normalize_keep(keep, self.qubits)?;
        check_density_cap(keep.len())?;
        let layout = SplitLayout::new(self.qubits, &keep);
        let dk = 1usize << keep.len();
        let dt = 1usize << (self.qubits - keep.len());
        let mut out = ComplexMatrix::zeros(dk, dk);
        for a in 0..dk {
            for b in 0..dk {
                let mut acc = ZERO;
                for t in 0..dt {
                    acc += self.amps[layout.full(a, t)] * self.amps[layout.full(b, t)].conj();
                }
                out[(a, b)] = acc;
            }
        }
        Ok(DensityMatrix::from_trusted(keep.len(), out))
    }
}

/// A density operator on `n` qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct DensityMatrix {
    qubits: usize,
    matrix: ComplexMatrix,
}

impl TryFrom<ComplexMatrix> for DensityMatrix {
    type Error = Error;

    fn try_from(m: ComplexMatrix) -> Result<Self> {
        DensityMatrix::new(m)
    }
}

impl From<DensityMatrix> for ComplexMatrix {
    fn from(d: DensityMatrix) -> Self {
        d.matrix
    }
}

fn check_density_cap(qubits: usize) -> Result<()> {
    if qubits > DENSITY_QUBIT_CAP {
        Err(Error::DimensionCap {
            what: "density-matrix qubits",
            got: qubits,
            cap: DENSITY_QUBIT_CAP,
        })
    } else {
        Ok(())
    }
}

impl DensityMatrix {
    /// Fully validated constructor: Hermitian, unit trace, positive semidefinite.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState("density matrix must be square".into()));
        }
        let qubits = qubits_for_dim(matrix.rows())
            .ok_or_else(|| Error::InvalidState(format!("dimension {} is not a power of two", matrix.rows())))?;
        check_density_cap(qubits)?;
        matrix.check_finite()?;
        let herm = matrix.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min_eig = eigvalsh(&matrix)?[0];
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(Self { qubits, matrix })
    }

    /// Used for outputs of operations that preserve the invariants by construction.
    pub(crate) fn from_trusted(qubits: usize, matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(matrix.rows(), 1 << qubits);
        debug_assert!(matrix.hermiticity_error() < 1e-7, "{:e}", matrix.hermiticity_error());
        debug_assert!((matrix.trace().re - 1.0).abs() < 1e-7, "trace {}", matrix.trace());
        Self { qubits, matrix }
    }

    pub fn from_pure(psi: &PureState) -> Result<Self> {
        psi.to_density()
    }

    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        PureState::basis(qubits, index)?.to_density()
    }

    pub fn maximally_mixed(qubits: usize) -> Result<Self> {
        check_density_cap(qubits)?;
        let d = 1usize << qubits;
        Ok(Self::from_trusted(
            qubits,
            ComplexMatrix::identity(d).scale_re(1.0 / d as f64),
        ))
    }

    /// The trivial state on zero qubits (`[[1]]`).
    pub fn trivial() -> Self {
        Self::from_trusted(0, ComplexMatrix::identity(1))
    }

    /// Convex combination `Σ w_k ρ_k`; weights must be nonnegative and sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let qubits = first.1.qubits;
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState("mixture weights must form a distribution".into()));
        }
        let d = 1usize << qubits;
        let mut acc = ComplexMatrix::zeros(d, d);
        for (w, rho) in parts {
            if rho.qubits != qubits {
                return Err(Error::DimensionMismatch("mixture of unequal sizes".into()));
            }
            acc = &acc + &rho.matrix.scale_re(*w);
        }
        Ok(Self::from_trusted(qubits, acc))
    }

    #[inline]
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        check_density_cap(self.qubits + other.qubits)?;
        Ok(Self::from_trusted(
            self.qubits + other.qubits,
            self.matrix.kron(&other.matrix),
        ))
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation_pure(&self, psi: &PureState) -> Result<f64> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state on {} qubits vs density matrix on {}",
                psi.qubits(),
                self.qubits
            )));
        }
        let v = self.matrix.apply(psi.amplitudes())?;
        Ok(psi
            .amplitudes()
            .iter()
            .zip(&v)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .re)
    }

    /// Real expectation `Tr[O ρ]` of a Hermitian observable.
    pub fn expectation(&self, observable: &ComplexMatrix) -> Result<f64> {
        if observable.rows() != self.dim() || observable.cols() != self.dim() {
            return Err(Error::DimensionMismatch("observable size".into()));
        }
        Ok(observable.trace_product_re(&self.matrix))
    }

    /// Diagonal in the computational basis up to `tol` on every off-diagonal entry.
    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.matrix.max_off_diagonal() <= tol
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigvalsh(&self.matrix)?[0])
    }

    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        trace_distance(self, other)
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        partial_trace(self, keep)
    }

    /// Matrix square root via the eigendecomposition (negative eigenvalues clamped).
    pub fn sqrt_matrix(m: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(hermitian_eig(m)?.map_spectrum(|x| x.max(0.0).sqrt()))
    }

    /// Rebuilds this state after an operation that may have drifted from the
    /// invariants by rounding: re-Hermitize and renormalise the trace.
    pub(crate) fn renormalized(qubits: usize, m: ComplexMatrix) -> Self {
        let d = m.rows();
        let herm = ComplexMatrix::from_fn(d, d, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
        let tr = herm.trace().re;
        Self::from_trusted(qubits, herm.scale_re(1.0 / tr))
    }
}

/// `½ Σ |λ_k(ρ − σ)|`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "trace distance between {} and {} qubits",
            rho.qubits, sigma.qubits
        )));
    }
    let diff = &rho.matrix - &sigma.matrix;
    let td = 0.5 * eigvalsh(&diff)?.iter().map(|l| l.abs()).sum::<f64>();
    Ok(td.clamp(0.0, 1.0))
}

/// Reduced state on the qubits listed in `keep` (0-based, any order; the
/// result keeps them in ascending order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let keep = normalize_keep(keep, rho.qubits)?;
    let layout = SplitLayout::new(rho.qubits, &keep);
    let dk = 1usize << keep.len();
    let dt = 1usize << (rho.qubits - keep.len());
    let mut out = ComplexMatrix::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = ZERO;
            for t in 0..dt {
                acc += rho.matrix[(layout.full(a, t), layout.full(b, t))];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(DensityMatrix::from_trusted(keep.len(), out))
}

fn normalize_keep(keep: &[usize], qubits: usize) -> Result<Vec<usize>> {
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    if let Some(&bad) = keep.iter().find(|&&q| q >= qubits) {
        return Err(Error::IndexOutOfRange { index: bad, qubits });
    }
    if keep.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidState("duplicate qubit in keep set".into()));
    }
    Ok(keep)
}

/// Maps (kept-index, traced-index) pairs to full basis indices.
struct SplitLayout {
    kept: Vec<usize>,
    traced: Vec<usize>,
}

impl SplitLayout {
    fn new(qubits: usize, keep: &[usize]) -> Self {
        let traced_qubits: Vec<usize> = (0..qubits).filter(|q| !keep.contains(q)).collect();
        let table = |set: &[usize]| -> Vec<usize> {
            (0..1usize << set.len())
                .map(|v| {
                    set.iter().enumerate().fold(0usize, |acc, (pos, &q)| {
                        let bit = (v >> (set.len() - 1 - pos)) & 1;
                        acc | (bit << (qubits - 1 - q))
                    })
                })
                .collect()
        };
        Self {
            kept: table(keep),
            traced: table(&traced_qubits),
        }
    }

    #[inline]
    fn full(&self, kept: usize, traced: usize) -> usize {
        self.kept[kept] | self.traced[traced]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::gates;
    use crate::qcore::random::{random_density, random_pure};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plus() -> DensityMatrix {
        PureState::plus(1).unwrap().to_density().unwrap()
    }

    #[test]
    fn trace_distance_of_identical_states_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(2, &mut rng);
        assert!(trace_distance(&rho, &rho).unwrap() < 1e-12);
    }

    #[test]
    fn trace_distance_zero_vs_plus() {
        let zero = DensityMatrix::basis(1, 0).unwrap();
        // Independent oracle: for a traceless 2x2 Hermitian difference the
        // eigenvalues are ±sqrt(a² + |b|²).
        let d = &zero.matrix - &plus().matrix;
        let oracle = (d[(0, 0)].re.powi(2) + d[(0, 1)].norm_sqr()).sqrt();
        assert!((oracle - 0.7071068).abs() < 1e-7);
        let td = trace_distance(&zero, &plus()).unwrap();
        assert!((td - 0.7071068).abs() < 1e-7, "{td}");
    }

    #[test]
    fn trace_distance_two_copies() {
        let pp = plus().tensor(&plus()).unwrap();
        let zz = DensityMatrix::basis(2, 0).unwrap();
        let td = trace_distance(&pp, &zz).unwrap();
        assert!((td - 0.8660254).abs() < 1e-7, "{td}");
    }

    #[test]
    fn trace_distance_dimension_mismatch() {
        let a = DensityMatrix::basis(1, 0).unwrap();
        let b = DensityMatrix::basis(2, 0).unwrap();
        assert!(matches!(trace_distance(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn partial_trace_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density(1, &mut rng);
        let sigma = random_density(2, &mut rng);
        let joint = rho.tensor(&sigma).unwrap();
        assert!(partial_trace(&joint, &[0])
            .unwrap()
            .matrix
            .approx_eq(&rho.matrix, 1e-12));
        assert!(partial_trace(&joint, &[1, 2])
            .unwrap()
            .matrix
            .approx_eq(&sigma.matrix, 1e-12));
    }

    #[test]
    fn partial_trace_of_bell_pair_is_maximally_mixed() {
        let bell = PureState::phi_plus().to_density().unwrap();
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        for keep in [[0], [1]] {
            let r = partial_trace(&bell, &keep).unwrap();
            assert!(r.matrix.approx_eq(&mixed.matrix, 1e-12));
        }
    }

    #[test]
    fn partial_trace_matches_index_summation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_pure(3, &mut rng);
        let rho = psi.to_density().unwrap();
        // Oracle: ρ_1[a][b] = Σ_{j,k} ψ[a j k] conj(ψ[b j k]).
        let amps = psi.amplitudes();
        let mut oracle = ComplexMatrix::zeros(2, 2);
        for a in 0..2 {
            for b in 0..2 {
                for rest in 0..4 {
                    oracle[(a, b)] += amps[a * 4 + rest] * amps[b * 4 + rest].conj();
                }
            }
        }
        let r = partial_trace(&rho, &[0]).unwrap();
        assert!(r.matrix.approx_eq(&oracle, 1e-10));
        assert!(psi.reduced(&[0]).unwrap().matrix.approx_eq(&oracle, 1e-10));
    }

    #[test]
    fn partial_trace_middle_qubit() {
        // |0⟩|1⟩|+⟩ keep {0,2} → |0⟩⟨0| ⊗ |+⟩⟨+|
        let psi = PureState::tensor_all(&[
            PureState::basis(1, 0).unwrap(),
            PureState::basis(1, 1).unwrap(),
            PureState::plus(1).unwrap(),
        ])
        .unwrap();
        let r = psi.to_density().unwrap().partial_trace(&[2, 0]).unwrap();
        let expected = DensityMatrix::basis(1, 0).unwrap().tensor(&plus()).unwrap();
        assert!(r.matrix.approx_eq(&expected.matrix, 1e-12));
    }

    #[test]
    fn partial_trace_rejects_bad_index() {
        let rho = DensityMatrix::basis(2, 0).unwrap();
        assert!(matches!(
            partial_trace(&rho, &[2]),
            Err(Error::IndexOutOfRange { index: 2, qubits: 2 })
        ));
    }

    #[test]
    fn density_validation() {
        let not_psd = ComplexMatrix::from_real_rows(&[&[1.5, 0.0], &[0.0, -0.5]]);
        assert!(DensityMatrix::new(not_psd).is_err());
        let bad_trace = ComplexMatrix::from_real_rows(&[&[0.5, 0.0], &[0.0, 0.4]]);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let ok = ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!(DensityMatrix::new(ok).is_ok());
    }

    #[test]
    fn pure_state_validation() {
        assert!(PureState::new(vec![ONE, ONE]).is_err());
        assert!(PureState::new(vec![ONE, ZERO, ZERO]).is_err());
        assert!(PureState::normalized(vec![ONE, ONE]).is_ok());
    }

    #[test]
    fn gate_application_matches_embedded_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = random_pure(3, &mut rng);
        let mut fast = psi.clone();
        fast.apply_1q(&gates::h(), 1).unwrap();
        let slow = psi.apply_unitary(&gates::embed1(&gates::h(), 1, 3)).unwrap();
        assert!(fast.fidelity(&slow).unwrap() > 1.0 - 1e-12);
    }
}
