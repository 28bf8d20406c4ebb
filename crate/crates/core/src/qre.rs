//! Restricted quantum randomized encodings and their compilation into the
//! two-round verification protocol.
//!
//! A scheme bundles the target channel `F`, the encoding `F̂` (already
//! averaged over its classical randomness), a decoder and a simulator,
//! together with the finite family of inputs it is claimed to work on.
//! Correctness and privacy errors are measured, not assumed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianSpec, Thresholds};
use crate::qcore::channel::Channel;
use crate::qcore::gates;
use crate::qcore::matrix::C64;
use crate::qcore::state::{trace_distance, DensityMatrix, PureState};
use crate::verify::{acceptance_with, bb84_state, bits_of, AcceptanceResult, Mode, ProverStrategy};

/// Off-diagonal magnitude below which an encoding output counts as classical.
pub const CLASSICAL_TOL: f64 = 1e-9;
/// Allowed trace distance between `F(σ_{h,m})` and the BB84-plus-junk form.
pub const PREMISE_TOL: f64 = 1e-9;
pub const DEPOLARIZED_STRENGTH: f64 = 0.1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SchemeRepr", into = "SchemeRepr")]
pub struct QreScheme {
    name: String,
    target: Channel,
    encode: Channel,
    decode: Channel,
    simulator: Channel,
    family: Vec<DensityMatrix>,
    junk_qubits: usize,
}

#[derive(Serialize, Deserialize)]
struct SchemeRepr {
    #[serde(default)]
    name: String,
    target: Channel,
    encode: Channel,
    decode: Channel,
    simulator: Channel,
    family: Vec<DensityMatrix>,
    #[serde(default)]
    junk_qubits: usize,
}

impl TryFrom<SchemeRepr> for QreScheme {
    type Error = Error;

    fn try_from(r: SchemeRepr) -> Result<Self> {
        QreScheme::new(
            r.name,
            r.target,
            r.encode,
            r.decode,
            r.simulator,
            r.family,
            r.junk_qubits,
        )
    }
}

impl From<QreScheme> for SchemeRepr {
    fn from(s: QreScheme) -> Self {
        SchemeRepr {
            name: s.name,
            target: s.target,
            encode: s.encode,
            decode: s.decode,
            simulator: s.simulator,
            family: s.family,
            junk_qubits: s.junk_qubits,
        }
    }
}

fn mismatch(what: &str, a: usize, b: usize) -> Error {
    Error::DimensionMismatch(format!("{what}: {a} vs {b} qubits"))
}

impl QreScheme {
    pub fn new(
        name: impl Into<String>,
        target: Channel,
        encode: Channel,
        decode: Channel,
        simulator: Channel,
        family: Vec<DensityMatrix>,
        junk_qubits: usize,
    ) -> Result<Self> {
        if encode.input_qubits() != target.input_qubits() {
            return Err(mismatch(
                "encoder input vs target input",
                encode.input_qubits(),
                target.input_qubits(),
            ));
        }
        if decode.input_qubits() != encode.output_qubits() {
            return Err(mismatch(
                "decoder input vs encoder output",
                decode.input_qubits(),
                encode.output_qubits(),
            ));
        }
        if decode.output_qubits() != target.output_qubits() {
            return Err(mismatch(
                "decoder output vs target output",
                decode.output_qubits(),
                target.output_qubits(),
            ));
        }
        if simulator.input_qubits() != target.output_qubits() {
            return Err(mismatch(
                "simulator input vs target output",
                simulator.input_qubits(),
                target.output_qubits(),
            ));
        }
        if simulator.output_qubits() != encode.output_qubits() {
            return Err(mismatch(
                "simulator output vs encoder output",
                simulator.output_qubits(),
                encode.output_qubits(),
            ));
        }
        if junk_qubits > target.output_qubits() {
            return Err(mismatch("junk vs target output", junk_qubits, target.output_qubits()));
        }
        if family.is_empty() {
            return Err(Error::MissingStates("empty family".into()));
        }
        if let Some(bad) = family.iter().find(|r| r.qubits() != target.input_qubits()) {
            return Err(mismatch(
                "family member vs target input",
                bad.qubits(),
                target.input_qubits(),
            ));
        }
        Ok(Self {
            name: name.into(),
            target,
            encode,
            decode,
            simulator,
            family,
            junk_qubits,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn target(&self) -> &Channel {
        &self.target
    }
    pub fn encode(&self) -> &Channel {
        &self.encode
    }
    pub fn decode(&self) -> &Channel {
        &self.decode
    }
    pub fn simulator(&self) -> &Channel {
        &self.simulator
    }
    pub fn family(&self) -> &[DensityMatrix] {
        &self.family
    }
    pub fn junk_qubits(&self) -> usize {
        self.junk_qubits
    }

    /// Per-member `(½‖Dec(F̂ρ) − Fρ‖₁, ½‖F̂ρ − Sim(Fρ)‖₁)`.
    pub fn member_errors(&self) -> Result<Vec<(f64, f64)>> {
        self.family
            .par_iter()
            .map(|rho| {
                let f = self.target.apply(rho)?;
                let enc = self.encode.apply(rho)?;
                let delta = trace_distance(&self.decode.apply(&enc)?, &f)?;
                let eps = trace_distance(&enc, &self.simulator.apply(&f)?)?;
                Ok((delta, eps))
            })
            .collect()
    }

    /// True iff every encoded family member is diagonal.
    pub fn is_classical(&self) -> Result<bool> {
        for rho in &self.family {
            if !self.encode.apply(rho)?.is_diagonal(CLASSICAL_TOL) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Pure target outputs `F(ρ_i)`, or an error if any is mixed.
    pub fn pure_outputs(&self) -> Result<Vec<PureState>> {
        self.family
            .iter()
            .enumerate()
            .map(|(i, rho)| {
                let out = self.target.apply(rho)?;
                let eig = crate::qcore::eig::hermitian_eig(out.matrix())?;
                let top = *eig.values.last().expect("nonempty spectrum");
                if (top - 1.0).abs() > PREMISE_TOL {
                    return Err(Error::PremiseViolated(format!(
                        "F(ρ_{i}) is not pure (largest eigenvalue {top})"
                    )));
                }
                PureState::normalized(eig.vector(eig.values.len() - 1))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub delta_hat: f64,
    pub eps_hat: f64,
    pub classical: bool,
    /// Size proxies for the decoder, which must be efficient.
    pub decoder_kraus: usize,
    pub decoder_qubits: usize,
}

pub fn measure_params(s: &QreScheme) -> Result<SchemeParams> {
    let errors = s.member_errors()?;
    let delta_hat = errors.iter().map(|e| e.0).fold(0.0, f64::max);
    let eps_hat = errors.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(SchemeParams {
        delta_hat,
        eps_hat,
        classical: s.is_classical()?,
        decoder_kraus: s.decode.kraus().len(),
        decoder_qubits: s.decode.input_qubits().max(s.decode.output_qubits()),
    })
}

/// `σ_{h,m} = ⊗_j H^{h+1}|m_j⟩`, ordered by `h·2^N + m`.
pub fn default_family(n: usize) -> Result<Vec<DensityMatrix>> {
    let mut out = Vec::with_capacity(1 << (n + 1));
    for h in [false, true] {
        for m in 0..1usize << n {
            // H^{h+1}|m⟩ is the BB84 state with the opposite basis bit.
            out.push(bb84_state(!h, &bits_of(m, n))?.to_density()?);
        }
    }
    Ok(out)
}

fn hadamard_all(n: usize) -> Result<Channel> {
    Channel::unitary(gates::tensor_power(&gates::h(), n))
}

/// `F = H^{⊗N}` conjugation, `F̂ = F`, trivial decoder and simulator.
pub fn identity_scheme(n: usize) -> Result<QreScheme> {
    let f = hadamard_all(n)?;
    QreScheme::new(
        "identity",
        f.clone(),
        f,
        Channel::identity(n),
        Channel::identity(n),
        default_family(n)?,
        0,
    )
}

/// As [`identity_scheme`] with one `|0⟩` junk qubit appended by `F`.
pub fn identity_junk_scheme(n: usize) -> Result<QreScheme> {
    let f = hadamard_all(n)?.then(&Channel::append_state(n, &DensityMatrix::basis(1, 0)?)?)?;
    QreScheme::new(
        "identity-junk",
        f.clone(),
        f,
        Channel::identity(n + 1),
        Channel::identity(n + 1),
        default_family(n)?,
        1,
    )
}

/// Identity scheme whose encoder is followed by per-qubit depolarizing noise.
pub fn depolarized_scheme(n: usize, p: f64) -> Result<QreScheme> {
    let f = hadamard_all(n)?;
    let noisy = f.then(&Channel::depolarizing(p)?.tensor_power(n))?;
    QreScheme::new(
        "depolarized",
        f,
        noisy,
        Channel::identity(n),
        Channel::identity(n),
        default_family(n)?,
        0,
    )
}

/// Classical identity on `{|0⟩, |1⟩}`: the encoder dephases, nothing is lost.
pub fn identity_classical_scheme() -> Result<QreScheme> {
    let family = vec![DensityMatrix::basis(1, 0)?, DensityMatrix::basis(1, 1)?];
    QreScheme::new(
        "identity-classical",
        Channel::identity(1),
        Channel::dephasing(1),
        Channel::identity(1),
        Channel::dephasing(1),
        family,
        0,
    )
}

/// Family `{|00⟩, |01⟩, |10⟩, |11⟩}`, mapped to `{|0⟩, |1⟩, |+⟩, |−⟩}` by a
/// controlled Hadamard followed by discarding the control.
fn labeled_bb84_target() -> Result<(Channel, Vec<DensityMatrix>)> {
    let f = Channel::unitary(gates::ch())?.then(&Channel::partial_trace(2, &[1])?)?;
    let family = (0..4).map(|k| DensityMatrix::basis(2, k)).collect::<Result<_>>()?;
    Ok((f, family))
}

/// Encoder measures the target output; correct only on the computational states.
pub fn measure_forward_scheme() -> Result<QreScheme> {
    let (f, family) = labeled_bb84_target()?;
    let encode = f.then(&Channel::dephasing(1))?;
    QreScheme::new(
        "measure-forward",
        f,
        encode,
        Channel::identity(1),
        Channel::dephasing(1),
        family,
        0,
    )
}

/// Encoder outputs the classical input label; the simulator guesses it from
/// a Breidbart measurement of the target output and a uniform basis guess.
pub fn label_scheme() -> Result<QreScheme> {
    let (f, family) = labeled_bb84_target()?;
    let encode = Channel::dephasing(2);
    let decode = Channel::dephasing(2).then(&f)?;
    let basis: Vec<Vec<C64>> = gates::breidbart_basis().iter().map(|v| v.to_vec()).collect();
    let outputs = (0..2)
        .map(|b| {
            (0..2)
                .map(|g| Ok((0.5, PureState::basis(2, (g << 1) | b)?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let simulator = Channel::measure_prepare(&basis, &outputs)?;
    QreScheme::new("label", f, encode, decode, simulator, family, 0)
}

pub const SCHEME_NAMES: [&str; 6] = [
    "identity",
    "identity-junk",
    "depolarized",
    "identity-classical",
    "measure-forward",
    "label",
];

/// Built-in scheme by name; `n` sizes the BB84-family schemes.
pub fn builtin(name: &str, n: usize) -> Result<QreScheme> {
    match name {
        "identity" => identity_scheme(n),
        "identity-junk" => identity_junk_scheme(n),
        "depolarized" => depolarized_scheme(n, DEPOLARIZED_STRENGTH),
        "identity-classical" => identity_classical_scheme(),
        "measure-forward" => measure_forward_scheme(),
        "label" => label_scheme(),
        other => Err(Error::Unknown {
            kind: "scheme",
            name: other.to_string(),
        }),
    }
}

/// The classical-encoding schemes used for the no-cloning checks.
pub fn classical_zoo() -> Result<Vec<QreScheme>> {
    Ok(vec![
        identity_classical_scheme()?,
        label_scheme()?,
        measure_forward_scheme()?,
    ])
}

/// Checks `F(σ_{h,m}) ≈ (⊗ H^h|m_j⟩⟨m_j|H^h) ⊗ η` and returns `η`.
pub fn check_premise(s: &QreScheme, n: usize) -> Result<DensityMatrix> {
    let settings = 1usize << (n + 1);
    if s.family.len() != settings {
        return Err(Error::PremiseViolated(format!(
            "family has {} members, protocol needs {settings}",
            s.family.len()
        )));
    }
    if s.target.output_qubits() != n + s.junk_qubits {
        return Err(Error::PremiseViolated(format!(
            "target outputs {} qubits, expected {n} + {} junk",
            s.target.output_qubits(),
            s.junk_qubits
        )));
    }
    let out0 = s.target.apply(&s.family[0])?;
    let eta = if s.junk_qubits == 0 {
        DensityMatrix::trivial()
    } else {
        out0.partial_trace(&(n..n + s.junk_qubits).collect::<Vec<_>>())?
    };
    for (k, sigma) in s.family.iter().enumerate() {
        let h = k >> n == 1;
        let expected = bb84_state(h, &bits_of(k & ((1 << n) - 1), n))?
            .to_density()?
            .tensor(&eta)?;
        let d = trace_distance(&s.target.apply(sigma)?, &expected)?;
        if d > PREMISE_TOL {
            return Err(Error::PremiseViolated(format!(
                "F(σ_{{h={},m={}}}) is {d:.3e} away from the BB84 product form",
                u8::from(h),
                k & ((1 << n) - 1)
            )));
        }
    }
    Ok(eta)
}

/// Prover behaviour in the encoded two-round protocol.
#[derive(Debug, Clone)]
pub enum TwoRoundStrategy {
    /// Decode, discard junk, then teleport the resource state.
    Honest(PureState),
    /// Measure the encoded state directly.
    Direct(ProverStrategy),
}

/// Acceptance of the two-round protocol where the verifier sends `F̂(σ_{h,m})`.
pub fn protocol_two_run(
    s: &QreScheme,
    spec: &HamiltonianSpec,
    strategy: &TwoRoundStrategy,
    mode: Mode,
) -> Result<AcceptanceResult> {
    let n = spec.n();
    check_premise(s, n)?;
    let keep: Vec<usize> = (0..n).collect();
    acceptance_with(spec, mode, |h, m| {
        let sigma = &s.family[(usize::from(h) << n) | m];
        let encoded = s.encode.apply(sigma)?;
        match strategy {
            TwoRoundStrategy::Honest(e0) => {
                let decoded = s.decode.apply(&encoded)?.partial_trace(&keep)?;
                ProverStrategy::HonestTeleport(e0.clone()).outcome_distribution(n, &decoded)
            }
            TwoRoundStrategy::Direct(inner) => inner.outcome_distribution(n, &encoded),
        }
    })
}

/// The original protocol against a prover who appends `η`, applies `Sim`
/// and then runs `strategy` on the result.
pub fn simulated_prover_run(
    s: &QreScheme,
    spec: &HamiltonianSpec,
    strategy: &ProverStrategy,
    mode: Mode,
) -> Result<AcceptanceResult> {
    let n = spec.n();
    let eta = check_premise(s, n)?;
    acceptance_with(spec, mode, |h, m| {
        let received = bb84_state(h, &bits_of(m, n))?.to_density()?;
        let simulated = s.simulator.apply(&received.tensor(&eta)?)?;
        strategy.outcome_distribution(n, &simulated)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub c_prime: f64,
    pub s_prime: f64,
    pub gap: f64,
    pub positive: bool,
}

/// Degraded completeness `1 − α − 2δ̂` and soundness `1 − β + 2ε̂`.
pub fn completeness_soundness_gap(params: &SchemeParams, thresholds: &Thresholds) -> GapReport {
    let c_prime = 1.0 - thresholds.alpha - 2.0 * params.delta_hat;
    let s_prime = 1.0 - thresholds.beta + 2.0 * params.eps_hat;
    let gap = c_prime - s_prime;
    GapReport {
        c_prime,
        s_prime,
        gap,
        positive: gap > 0.0,
    }
}
