//! Completely positive trace-preserving maps as Kraus lists.
//!
//! Classical randomness inside a channel is modelled by enlarging the Kraus
//! list: the mixture `Σ_r w_r Φ_r` has Kraus operators `√w_r K^{(r)}_k`.
//! Compositions can blow up the Kraus count, so they are compressed through
//! the Choi matrix whenever that is cheap.

use serde::{Deserialize, Serialize};

use super::eig::hermitian_eig;
use super::matrix::{ComplexMatrix, C64, ZERO};
use super::state::{DensityMatrix, PureState, DENSITY_QUBIT_CAP};
use crate::error::{Error, Result};

pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Largest Choi dimension we are willing to diagonalise when compressing.
const SIMPLIFY_CHOI_CAP: usize = 256;
const ZERO_KRAUS_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ChannelRepr", into = "ChannelRepr")]
pub struct Channel {
    input_qubits: usize,
    output_qubits: usize,
    kraus: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
struct ChannelRepr {
    input_qubits: usize,
    output_qubits: usize,
    kraus: Vec<ComplexMatrix>,
}

impl TryFrom<ChannelRepr> for Channel {
    type Error = Error;

    fn try_from(r: ChannelRepr) -> Result<Self> {
        Channel::new(r.input_qubits, r.output_qubits, r.kraus)
    }
}

impl From<Channel> for ChannelRepr {
    fn from(c: Channel) -> Self {
        ChannelRepr {
            input_qubits: c.input_qubits,
            output_qubits: c.output_qubits,
            kraus: c.kraus,
        }
    }
}

impl Channel {
    pub fn new(input_qubits: usize, output_qubits: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let din = 1usize << input_qubits;
        let dout = 1usize << output_qubits;
        if kraus.is_empty() {
            return Err(Error::InvalidChannel("empty Kraus list".into()));
        }
        for (k, op) in kraus.iter().enumerate() {
            if op.rows() != dout || op.cols() != din {
                return Err(Error::InvalidChannel(format!(
                    "Kraus operator {k} is {}x{}, expected {dout}x{din}",
                    op.rows(),
                    op.cols()
                )));
            }
            op.check_finite()?;
        }
        let ch = Self {
            input_qubits,
            output_qubits,
            kraus,
        };
        let err = ch.completeness_error();
        if err > COMPLETENESS_TOL {
            return Err(Error::InvalidChannel(format!(
                "Kraus completeness violated by {err:.3e}"
            )));
        }
        Ok(ch)
    }

    fn from_parts(input_qubits: usize, output_qubits: usize, kraus: Vec<ComplexMatrix>) -> Self {
        let ch = Self {
            input_qubits,
            output_qubits,
            kraus,
        };
        debug_assert!(ch.completeness_error() < 1e-7, "{}", ch.completeness_error());
        ch
    }

    pub fn identity(qubits: usize) -> Self {
        Self::from_parts(qubits, qubits, vec![ComplexMatrix::identity(1 << qubits)])
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        let qubits = super::state::qubits_for_dim(u.rows())
            .filter(|_| u.is_square())
            .ok_or_else(|| Error::InvalidChannel("unitary must be square, 2^n".into()))?;
        Self::new(qubits, qubits, vec![u])
    }

    /// Single-qubit depolarizing channel `ρ ↦ (1−p)ρ + p·I/2`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidChannel(format!("depolarizing strength {p} not in [0,1]")));
        }
        use super::gates::{id, x, y, z};
        let k0 = (1.0 - 0.75 * p).sqrt();
        let k = (p / 4.0).sqrt();
        Self::new(
            1,
            1,
            vec![id().scale_re(k0), x().scale_re(k), y().scale_re(k), z().scale_re(k)],
        )
    }

    /// Complete dephasing in the computational basis on `qubits` qubits.
    pub fn dephasing(qubits: usize) -> Self {
        let d = 1usize << qubits;
        let kraus = (0..d)
            .map(|z| {
                let mut p = ComplexMatrix::zeros(d, d);
                p[(z, z)] = C64::new(1.0, 0.0);
                p
            })
            .collect();
        Self::from_parts(qubits, qubits, kraus)
    }

    /// Traces out every qubit not listed in `keep`.
    pub fn partial_trace(qubits: usize, keep: &[usize]) -> Result<Self> {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if let Some(&bad) = keep.iter().find(|&&q| q >= qubits) {
            return Err(Error::IndexOutOfRange { index: bad, qubits });
        }
        let traced: Vec<usize> = (0..qubits).filter(|q| !keep.contains(q)).collect();
        let dk = 1usize << keep.len();
        let kraus = (0..1usize << traced.len())
            .map(|t| {
                let mut k = ComplexMatrix::zeros(dk, 1 << qubits);
                for a in 0..dk {
                    let mut full = 0usize;
                    for (pos, &q) in keep.iter().enumerate() {
                        full |= ((a >> (keep.len() - 1 - pos)) & 1) << (qubits - 1 - q);
                    }
                    for (pos, &q) in traced.iter().enumerate() {
                        full |= ((t >> (traced.len() - 1 - pos)) & 1) << (qubits - 1 - q);
                    }
                    k[(a, full)] = C64::new(1.0, 0.0);
                }
                k
            })
            .collect();
        Ok(Self::from_parts(qubits, keep.len(), kraus))
    }

    /// `ρ ↦ ρ ⊗ η` (the ancilla occupies the low-order qubits).
    pub fn append_state(qubits: usize, eta: &DensityMatrix) -> Result<Self> {
        let eig = hermitian_eig(eta.matrix())?;
        let din = 1usize << qubits;
        let id = ComplexMatrix::identity(din);
        let kraus: Vec<ComplexMatrix> = eig
            .values
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 1e-14)
            .map(|(k, &l)| {
                let col = ComplexMatrix::column(&eig.vector(k)).scale_re(l.sqrt());
                id.kron(&col)
            })
            .collect();
        Self::new(qubits, qubits + eta.qubits(), kraus)
    }

    /// Discards the input and prepares `sigma`.
    pub fn replace(input_qubits: usize, sigma: &DensityMatrix) -> Result<Self> {
        let eig = hermitian_eig(sigma.matrix())?;
        let din = 1usize << input_qubits;
        let mut kraus = Vec::new();
        for (k, &l) in eig.values.iter().enumerate() {
            if l <= 1e-14 {
                continue;
            }
            let v = eig.vector(k);
            for i in 0..din {
                let mut e = vec![ZERO; din];
                e[i] = C64::new(1.0, 0.0);
                kraus.push(ComplexMatrix::outer(&v, &e).scale_re(l.sqrt()));
            }
        }
        Self::new(input_qubits, sigma.qubits(), kraus)
    }

    /// Measure in an orthonormal basis `{|e_b⟩}` and prepare a mixture
    /// `Σ_j w_{b,j} |φ_{b,j}⟩⟨φ_{b,j}|` on outcome `b`.
    pub fn measure_prepare(basis: &[Vec<C64>], outputs: &[Vec<(f64, PureState)>]) -> Result<Self> {
        if basis.len() != outputs.len() || basis.is_empty() {
            return Err(Error::InvalidChannel("one output ensemble per basis vector".into()));
        }
        let input_qubits = super::state::qubits_for_dim(basis[0].len())
            .ok_or_else(|| Error::InvalidChannel("basis vectors must have length 2^n".into()))?;
        let output_qubits = outputs[0]
            .first()
            .map(|(_, s)| s.qubits())
            .ok_or_else(|| Error::InvalidChannel("empty output ensemble".into()))?;
        let mut kraus = Vec::new();
        for (e, ensemble) in basis.iter().zip(outputs) {
            for (w, phi) in ensemble {
                if *w < 0.0 {
                    return Err(Error::InvalidChannel("negative ensemble weight".into()));
                }
                if *w == 0.0 {
                    continue;
                }
                kraus.push(ComplexMatrix::outer(phi.amplitudes(), e).scale_re(w.sqrt()));
            }
        }
        Self::new(input_qubits, output_qubits, kraus)
    }

    /// Convex mixture `Σ w_r Φ_r` of channels with identical signatures.
    pub fn mixture(parts: &[(f64, &Channel)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::InvalidChannel("empty mixture".into()))?;
        let mut kraus = Vec::new();
        for (w, ch) in parts {
            if ch.input_qubits != first.input_qubits || ch.output_qubits != first.output_qubits {
                return Err(Error::DimensionMismatch("mixture of unequal channel signatures".into()));
            }
            if *w < 0.0 {
                return Err(Error::InvalidChannel("negative mixture weight".into()));
            }
            kraus.extend(ch.kraus.iter().map(|k| k.scale_re(w.sqrt())));
        }
        Ok(Self::new(first.input_qubits, first.output_qubits, kraus)?.simplified())
    }

    #[inline]
    pub fn input_qubits(&self) -> usize {
        self.input_qubits
    }

    #[inline]
    pub fn output_qubits(&self) -> usize {
        self.output_qubits
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `max |Σ K†K − I|`.
    pub fn completeness_error(&self) -> f64 {
        let din = 1usize << self.input_qubits;
        let mut acc = ComplexMatrix::zeros(din, din);
        for k in &self.kraus {
            acc = &acc + &(&k.adjoint() * k);
        }
        (&acc - &ComplexMatrix::identity(din)).max_abs()
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.qubits() != self.input_qubits {
            return Err(Error::DimensionMismatch(format!(
                "channel on {} qubits applied to {}-qubit state",
                self.input_qubits,
                rho.qubits()
            )));
        }
        if self.output_qubits > DENSITY_QUBIT_CAP {
            return Err(Error::DimensionCap {
                what: "channel output qubits",
                got: self.output_qubits,
                cap: DENSITY_QUBIT_CAP,
            });
        }
        let dout = 1usize << self.output_qubits;
        let mut acc = ComplexMatrix::zeros(dout, dout);
        for k in &self.kraus {
            acc = &acc + &k.sandwich(rho.matrix());
        }
        Ok(DensityMatrix::from_trusted(self.output_qubits, acc))
    }

    /// Heisenberg-picture action `Σ K† O K` (pulls an effect back through the channel).
    pub fn apply_adjoint(&self, observable: &ComplexMatrix) -> Result<ComplexMatrix> {
        let dout = 1usize << self.output_qubits;
        if observable.rows() != dout || observable.cols() != dout {
            return Err(Error::DimensionMismatch(
                "observable does not match channel output".into(),
            ));
        }
        let din = 1usize << self.input_qubits;
        let mut acc = ComplexMatrix::zeros(din, din);
        for k in &self.kraus {
            acc = &acc + &k.sandwich_adjoint(observable);
        }
        Ok(acc)
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &Channel) -> Result<Self> {
        if self.output_qubits != next.input_qubits {
            return Err(Error::DimensionMismatch(format!(
                "composing {}→{} with {}→{}",
                self.input_qubits, self.output_qubits, next.input_qubits, next.output_qubits
            )));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for b in &next.kraus {
            for a in &self.kraus {
                let k = b.matmul_unchecked(a);
                if k.frobenius_norm() > ZERO_KRAUS_TOL {
                    kraus.push(k);
                }
            }
        }
        Ok(Self::from_parts(self.input_qubits, next.output_qubits, kraus).simplified())
    }

    /// `self ⊗ other`, `self` on the high-order qubits.
    pub fn tensor(&self, other: &Channel) -> Self {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(a.kron(b));
            }
        }
        Self::from_parts(
            self.input_qubits + other.input_qubits,
            self.output_qubits + other.output_qubits,
            kraus,
        )
        .simplified()
    }

    pub fn tensor_power(&self, k: usize) -> Self {
        (1..k).fold(self.clone(), |acc, _| acc.tensor(self))
    }

    /// Choi matrix `J[(o,i),(o',i')] = Σ_k K_k[o,i] conj(K_k[o',i'])`.
    pub fn choi(&self) -> ComplexMatrix {
        let din = 1usize << self.input_qubits;
        let dout = 1usize << self.output_qubits;
        let n = din * dout;
        let mut j = ComplexMatrix::zeros(n, n);
        for k in &self.kraus {
            let v = k.as_slice();
            for a in 0..n {
                if v[a] == ZERO {
                    continue;
                }
                for b in 0..n {
                    j[(a, b)] += v[a] * v[b].conj();
                }
            }
        }
        j
    }

    /// Re-derives a minimal Kraus list from the Choi matrix when that is
    /// smaller than the current list and cheap to compute.
    pub fn simplified(self) -> Self {
        let n = (1usize << self.input_qubits) * (1usize << self.output_qubits);
        if self.kraus.len() <= n || n > SIMPLIFY_CHOI_CAP {
            return self;
        }
        let Ok(eig) = hermitian_eig(&self.choi()) else {
            return self;
        };
        let scale = eig.values.iter().fold(0.0_f64, |m, l| m.max(l.abs())).max(1.0);
        let dout = 1usize << self.output_qubits;
        let din = 1usize << self.input_qubits;
        let kraus: Vec<ComplexMatrix> = eig
            .values
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 1e-13 * scale)
            .map(|(k, &l)| {
                let v = eig.vector(k);
                ComplexMatrix::from_vec(dout, din, v.iter().map(|z| z * l.sqrt()).collect())
                    .expect("Choi eigenvector has d_out·d_in entries")
            })
            .collect();
        Self::from_parts(self.input_qubits, self.output_qubits, kraus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::gates;
    use crate::qcore::random::{random_channel, random_density};
    use crate::qcore::state::trace_distance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plus() -> DensityMatrix {
        PureState::plus(1).unwrap().to_density().unwrap()
    }

    #[test]
    fn identity_channel_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_density(2, &mut rng);
        let out = Channel::identity(2).apply(&rho).unwrap();
        assert!(out.matrix().approx_eq(rho.matrix(), 1e-14));
    }

    #[test]
    fn full_depolarization() {
        let out = Channel::depolarizing(1.0)
            .unwrap()
            .apply(&DensityMatrix::basis(1, 0).unwrap())
            .unwrap();
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert!(out.matrix().approx_eq(mixed.matrix(), 1e-14));
    }

    #[test]
    fn dephasing_kills_coherence() {
        let out = Channel::dephasing(1).apply(&plus()).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert!(out.matrix().approx_eq(mixed.matrix(), 1e-14));
    }

    #[test]
    fn rejects_incomplete_kraus() {
        let half = gates::id().scale_re(0.5);
        assert!(matches!(Channel::new(1, 1, vec![half]), Err(Error::InvalidChannel(_))));
    }

    #[test]
    fn rejects_wrong_input_size() {
        let rho = DensityMatrix::basis(2, 0).unwrap();
        assert!(Channel::identity(1).apply(&rho).is_err());
    }

    #[test]
    fn partial_trace_channel_matches_partial_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = random_density(3, &mut rng);
        let ch = Channel::partial_trace(3, &[0, 2]).unwrap();
        let direct = rho.partial_trace(&[0, 2]).unwrap();
        assert!(ch.apply(&rho).unwrap().matrix().approx_eq(direct.matrix(), 1e-12));
    }

    #[test]
    fn append_then_trace_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = random_density(1, &mut rng);
        let eta = random_density(1, &mut rng);
        let appended = Channel::append_state(1, &eta).unwrap().apply(&rho).unwrap();
        let expected = rho.tensor(&eta).unwrap();
        assert!(appended.matrix().approx_eq(expected.matrix(), 1e-12));
    }

    #[test]
    fn composition_and_simplification_preserve_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_channel(1, 2, 4, &mut rng);
        let b = random_channel(2, 1, 6, &mut rng);
        let rho = random_density(1, &mut rng);
        let composed = a.then(&b).unwrap();
        assert!(composed.kraus().len() <= 4);
        let step = b.apply(&a.apply(&rho).unwrap()).unwrap();
        assert!(composed.apply(&rho).unwrap().matrix().approx_eq(step.matrix(), 1e-10));
        assert!(composed.completeness_error() < 1e-10);
    }

    #[test]
    fn tensor_acts_independently() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_channel(1, 1, 2, &mut rng);
        let b = random_channel(1, 1, 3, &mut rng);
        let r1 = random_density(1, &mut rng);
        let r2 = random_density(1, &mut rng);
        let joint = a.tensor(&b).apply(&r1.tensor(&r2).unwrap()).unwrap();
        let separate = a.apply(&r1).unwrap().tensor(&b.apply(&r2).unwrap()).unwrap();
        assert!(joint.matrix().approx_eq(separate.matrix(), 1e-12));
    }

    #[test]
    fn adjoint_is_dual_to_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let ch = random_channel(2, 1, 3, &mut rng);
        let rho = random_density(2, &mut rng);
        let obs = gates::z();
        let lhs = ch.apply(&rho).unwrap().expectation(&obs).unwrap();
        let rhs = rho.expectation(&ch.apply_adjoint(&obs).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn mixture_averages() {
        let id = Channel::identity(1);
        let deph = Channel::dephasing(1);
        let mix = Channel::mixture(&[(0.5, &id), (0.5, &deph)]).unwrap();
        let out = mix.apply(&plus()).unwrap();
        assert!((out.matrix()[(0, 1)].re - 0.25).abs() < 1e-14);
    }

    #[test]
    fn monotonicity_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ch = random_channel(2, 2, 3, &mut rng);
        let rho = random_density(2, &mut rng);
        let sigma = random_density(2, &mut rng);
        let before = trace_distance(&rho, &sigma).unwrap();
        let after = trace_distance(&ch.apply(&rho).unwrap(), &ch.apply(&sigma).unwrap()).unwrap();
        assert!(after <= before + 1e-8);
    }

    #[test]
    fn serde_round_trip_revalidates() {
        let ch = Channel::depolarizing(0.3).unwrap();
        let json = serde_json::to_string(&ch).unwrap();
        let back: Channel = serde_json::from_str(&json).unwrap();
        assert_eq!(back.kraus().len(), 4);
        let broken = json.replacen("0.8", "0.9", 1);
        assert!(serde_json::from_str::<Channel>(&broken).is_err());
    }
}
