//! The BB84-state verification protocol with a trusted center and its
//! two-round variant in which the verifier prepares the states itself.
//!
//! Both variants produce the same classical transcript distribution, so one
//! implementation serves both. Prover outcomes are indexed as
//! `(x_bits << N) | z_bits` with qubit 0 the most significant bit of each
//! bit string.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{ground, HamiltonianSpec, Term};
use crate::harness::seed::trial_rng;
use crate::qcore::gates;
use crate::qcore::matrix::{C64, ZERO};
use crate::qcore::povm::{sample_index, Povm};
use crate::qcore::state::{DensityMatrix, PureState};

/// Largest `N` for exact enumeration.
pub const EXACT_MAX_QUBITS: usize = 4;
/// Largest `N` for Monte Carlo; all `2^{N+1}` outcome distributions are cached.
pub const MC_MAX_QUBITS: usize = 6;

/// `⊗_j H^h |m_j⟩`.
pub fn bb84_state(h: bool, m: &[bool]) -> Result<PureState> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let factors: Vec<PureState> = m
        .iter()
        .map(|&bit| {
            let amps = match (h, bit) {
                (false, false) => [C64::new(1.0, 0.0), ZERO],
                (false, true) => [ZERO, C64::new(1.0, 0.0)],
                (true, false) => [C64::new(s, 0.0), C64::new(s, 0.0)],
                (true, true) => [C64::new(s, 0.0), C64::new(-s, 0.0)],
            };
            PureState::single(amps)
        })
        .collect::<Result<_>>()?;
    PureState::tensor_all(&factors)
}

pub(crate) fn bits_of(value: usize, n: usize) -> Vec<bool> {
    (0..n).map(|q| (value >> (n - 1 - q)) & 1 == 1).collect()
}

pub(crate) fn value_of(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
}

/// A challenge drawn by the center (or the verifier).
#[derive(Debug, Clone)]
pub struct CenterSample {
    pub h: bool,
    pub m: Vec<bool>,
    pub state: PureState,
}

impl CenterSample {
    pub fn new(h: bool, m: Vec<bool>) -> Result<Self> {
        let state = bb84_state(h, &m)?;
        Ok(Self { h, m, state })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let h = rng.random::<bool>();
        let m = (0..n).map(|_| rng.random::<bool>()).collect();
        Self::new(h, m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProverReport {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
}

impl ProverReport {
    pub fn new(x: Vec<bool>, z: Vec<bool>) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                got: z.len(),
            });
        }
        Ok(Self { x, z })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            x: vec![false; n],
            z: vec![false; n],
        }
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        Self {
            x: bits_of(index >> n, n),
            z: bits_of(index & ((1 << n) - 1), n),
        }
    }

    pub fn index(&self) -> usize {
        (value_of(&self.x) << self.x.len()) | value_of(&self.z)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// How the prover turns the received state into a report.
#[derive(Debug, Clone)]
pub enum ProverStrategy {
    /// Bell-measure each received qubit against the matching qubit of a resource state.
    HonestTeleport(PureState),
    FixedReport(ProverReport),
    UniformRandomReport,
    /// Measure the first `N` received qubits in the computational basis, report them as `x`, `z = 0`.
    WrongBasisMeasure,
    /// Arbitrary POVM whose labels are outcome indices `(x << N) | z`.
    CustomPovm(Povm),
}

impl fmt::Display for ProverStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::HonestTeleport(_) => "honest-teleport",
            Self::FixedReport(_) => "fixed-report",
            Self::UniformRandomReport => "uniform-random-report",
            Self::WrongBasisMeasure => "wrong-basis-measure",
            Self::CustomPovm(_) => "custom-povm",
        })
    }
}

impl ProverStrategy {
    /// Looks up a built-in strategy. `honest` uses the instance's ground state.
    pub fn from_name(name: &str, spec: &HamiltonianSpec) -> Result<Self> {
        let n = spec.n();
        Ok(match name {
            "honest" | "honest-teleport" => Self::HonestTeleport(ground(spec)?.state),
            "honest-zero" => Self::HonestTeleport(PureState::zero(n)?),
            "fixed" | "fixed-report" => Self::FixedReport(ProverReport::zeros(n)),
            "uniform" | "uniform-random-report" => Self::UniformRandomReport,
            "wrong-basis" | "wrong-basis-measure" => Self::WrongBasisMeasure,
            other => {
                return Err(Error::Unknown {
                    kind: "strategy",
                    name: other.to_string(),
                })
            }
        })
    }

    /// Checks the strategy produces `N`-bit reports.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Self::HonestTeleport(psi) if psi.qubits() != n => Err(Error::InvalidStrategy(format!(
                "resource state has {} qubits, protocol has {n}",
                psi.qubits()
            ))),
            Self::FixedReport(r) if r.len() != n => Err(Error::LengthMismatch {
                expected: n,
                got: r.len(),
            }),
            Self::CustomPovm(p) => {
                let want = 1usize << (2 * n);
                let mut labels: Vec<usize> = p.effects().iter().map(|e| e.label).collect();
                labels.sort_unstable();
                if labels != (0..want).collect::<Vec<_>>() {
                    return Err(Error::InvalidStrategy(format!(
                        "custom POVM must label exactly the {want} outcomes (x, z)"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Exact report distribution on a received state, indexed `(x << N) | z`.
    pub fn outcome_distribution(&self, n: usize, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.validate(n)?;
        let outcomes = 1usize << (2 * n);
        match self {
            Self::HonestTeleport(e0) => {
                expect_qubits(rho.qubits(), n)?;
                let scale = 1.0 / (1usize << n) as f64;
                Ok((0..outcomes)
                    .map(|o| {
                        let w = teleport_vector(e0, o, n);
                        let rw = rho.matrix().apply(&w).expect("dimension checked");
                        let p: C64 = w.iter().zip(&rw).map(|(a, b)| a.conj() * b).sum();
                        (p.re * scale).max(0.0)
                    })
                    .collect())
            }
            Self::FixedReport(_) | Self::UniformRandomReport => Ok(self.state_free_distribution(n)),
            Self::WrongBasisMeasure => {
                if rho.qubits() < n {
                    return Err(Error::DimensionMismatch(format!(
                        "wrong-basis prover needs at least {n} qubits, got {}",
                        rho.qubits()
                    )));
                }
                let extra = rho.qubits() - n;
                let mut d = vec![0.0; outcomes];
                for (idx, p) in rho.diagonal().into_iter().enumerate() {
                    d[(idx >> extra) << n] += p.max(0.0);
                }
                Ok(d)
            }
            Self::CustomPovm(povm) => {
                let mut d = vec![0.0; outcomes];
                for (label, p) in povm.probabilities(rho)? {
                    d[label] = p;
                }
                Ok(d)
            }
        }
    }

    /// As [`outcome_distribution`](Self::outcome_distribution) but with a pure received state,
    /// avoiding the density matrix for the honest prover.
    pub fn outcome_distribution_pure(&self, n: usize, psi: &PureState) -> Result<Vec<f64>> {
        match self {
            Self::HonestTeleport(e0) => {
                self.validate(n)?;
                expect_qubits(psi.qubits(), n)?;
                let scale = 1.0 / (1usize << n) as f64;
                Ok((0..1usize << (2 * n))
                    .map(|o| {
                        let w = teleport_vector(e0, o, n);
                        let amp: C64 = w.iter().zip(psi.amplitudes()).map(|(a, b)| a.conj() * b).sum();
                        amp.norm_sqr() * scale
                    })
                    .collect())
            }
            Self::FixedReport(_) | Self::UniformRandomReport => {
                self.validate(n)?;
                Ok(self.state_free_distribution(n))
            }
            _ => self.outcome_distribution(n, &psi.to_density()?),
        }
    }
}

impl ProverStrategy {
    fn state_free_distribution(&self, n: usize) -> Vec<f64> {
        let outcomes = 1usize << (2 * n);
        match self {
            Self::FixedReport(r) => {
                let mut d = vec![0.0; outcomes];
                d[r.index()] = 1.0;
                d
            }
            _ => vec![1.0 / outcomes as f64; outcomes],
        }
    }
}

fn expect_qubits(got: usize, n: usize) -> Result<()> {
    if got != n {
        return Err(Error::DimensionMismatch(format!(
            "received state has {got} qubits, protocol has {n}"
        )));
    }
    Ok(())
}

/// `conj((⊗_j Z^{z_j} X^{x_j}) |e0⟩)`: the honest prover's effective rank-one
/// effect on the received register is `2^{-N} |w⟩⟨w|`.
fn teleport_vector(e0: &PureState, outcome: usize, n: usize) -> Vec<C64> {
    let report = ProverReport::from_index(outcome, n);
    let mut v = e0.clone();
    for q in 0..n {
        if report.x[q] {
            v.apply_1q(&gates::x(), q).expect("qubit in range");
        }
        if report.z[q] {
            v.apply_1q(&gates::z(), q).expect("qubit in range");
        }
    }
    v.amplitudes().iter().map(|a| a.conj()).collect()
}

/// Samples the honest prover's report for a received state.
pub fn honest_prover_respond<R: Rng + ?Sized>(
    received: &DensityMatrix,
    e0: &PureState,
    rng: &mut R,
) -> Result<ProverReport> {
    let n = e0.qubits();
    let dist = ProverStrategy::HonestTeleport(e0.clone()).outcome_distribution(n, received)?;
    Ok(ProverReport::from_index(sample_index(&dist, rng)?, n))
}

/// Corrected bits `m'_k = m_k ⊕ (h ? z_k : x_k)`.
pub fn corrected_bits(h: bool, m: &[bool], report: &ProverReport) -> Vec<bool> {
    let key = if h { &report.z } else { &report.x };
    m.iter().zip(key).map(|(a, b)| a ^ b).collect()
}

/// Accepts iff `(−1)^{m'_i} (−1)^{m'_j} = −s`.
pub fn verifier_decide(h: bool, m: &[bool], report: &ProverReport, term: &Term) -> bool {
    let mp = corrected_bits(h, m, report);
    let odd = mp[term.i] ^ mp[term.j];
    odd == (term.s == 1)
}

/// Term-averaged acceptance for every corrected bit string, indexed by `m'`.
fn acceptance_table(spec: &HamiltonianSpec) -> Vec<f64> {
    let n = spec.n();
    (0..1usize << n)
        .map(|mp| {
            spec.terms()
                .iter()
                .filter(|t| {
                    let odd = ((mp >> (n - 1 - t.i)) ^ (mp >> (n - 1 - t.j))) & 1 == 1;
                    odd == (t.s == 1)
                })
                .map(|t| t.p)
                .sum()
        })
        .collect()
}

#[inline]
fn corrected_index(h: bool, m: usize, outcome: usize, n: usize) -> usize {
    let key = if h { outcome & ((1 << n) - 1) } else { outcome >> n };
    m ^ key
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

/// How an acceptance probability is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    MonteCarlo { trials: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceResult {
    pub probability: f64,
    pub method: Method,
    /// Number of sampled runs; zero for exact enumeration.
    pub trials: u64,
    pub std_error: Option<f64>,
}

/// Exact acceptance for an arbitrary report distribution per challenge `(h, m)`.
pub fn acceptance_exact_with<F>(spec: &HamiltonianSpec, distribution: F) -> Result<AcceptanceResult>
where
    F: Fn(bool, usize) -> Result<Vec<f64>> + Sync,
{
    let n = spec.n();
    if n > EXACT_MAX_QUBITS {
        return Err(Error::TooLargeForExact {
            n,
            cap: EXACT_MAX_QUBITS,
        });
    }
    let table = acceptance_table(spec);
    let settings = 1usize << (n + 1);
    let parts: Vec<f64> = (0..settings)
        .into_par_iter()
        .map(|k| {
            let h = k >> n == 1;
            let m = k & ((1 << n) - 1);
            let dist = distribution(h, m)?;
            Ok(dist
                .iter()
                .enumerate()
                .map(|(o, p)| p * table[corrected_index(h, m, o, n)])
                .sum::<f64>())
        })
        .collect::<Result<_>>()?;
    let probability = (parts.iter().sum::<f64>() / settings as f64).clamp(0.0, 1.0);
    Ok(AcceptanceResult {
        probability,
        method: Method::Exact,
        trials: 0,
        std_error: None,
    })
}

/// Exact acceptance probability with the prover receiving `⊗ H^h|m_j⟩`.
pub fn acceptance_exact(spec: &HamiltonianSpec, strategy: &ProverStrategy) -> Result<AcceptanceResult> {
    let n = spec.n();
    strategy.validate(n)?;
    acceptance_exact_with(spec, |h, m| {
        strategy.outcome_distribution_pure(n, &bb84_state(h, &bits_of(m, n))?)
    })
}

/// Monte Carlo acceptance for an arbitrary report distribution per challenge.
pub fn acceptance_mc_with<F>(
    spec: &HamiltonianSpec,
    trials: u64,
    seed: u64,
    distribution: F,
) -> Result<AcceptanceResult>
where
    F: Fn(bool, usize) -> Result<Vec<f64>> + Sync,
{
    let n = spec.n();
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if n > MC_MAX_QUBITS {
        return Err(Error::DimensionCap {
            what: "Monte Carlo qubits",
            got: n,
            cap: MC_MAX_QUBITS,
        });
    }
    let settings = 1usize << (n + 1);
    let cache: Vec<Vec<f64>> = (0..settings)
        .into_par_iter()
        .map(|k| distribution(k >> n == 1, k & ((1 << n) - 1)))
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = spec.terms().iter().map(|t| t.p).collect();
    let accepted: u64 = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<u64> {
            let mut rng = trial_rng(seed, i);
            let h = rng.random::<bool>();
            let m = rng.random_range(0..1usize << n);
            let outcome = sample_index(&cache[(usize::from(h) << n) | m], &mut rng)?;
            let term = &spec.terms()[sample_index(&weights, &mut rng)?];
            let report = ProverReport::from_index(outcome, n);
            Ok(u64::from(verifier_decide(h, &bits_of(m, n), &report, term)))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let p = accepted as f64 / trials as f64;
    Ok(AcceptanceResult {
        probability: p,
        method: Method::MonteCarlo,
        trials,
        std_error: Some((p * (1.0 - p) / trials as f64).sqrt()),
    })
}

/// Dispatches to exact or Monte Carlo evaluation.
pub fn acceptance_with<F>(spec: &HamiltonianSpec, mode: Mode, distribution: F) -> Result<AcceptanceResult>
where
    F: Fn(bool, usize) -> Result<Vec<f64>> + Sync,
{
    match mode {
        Mode::Exact => acceptance_exact_with(spec, distribution),
        Mode::MonteCarlo { trials, seed } => acceptance_mc_with(spec, trials, seed, distribution),
    }
}

pub fn acceptance(spec: &HamiltonianSpec, strategy: &ProverStrategy, mode: Mode) -> Result<AcceptanceResult> {
    match mode {
        Mode::Exact => acceptance_exact(spec, strategy),
        Mode::MonteCarlo { trials, seed } => acceptance_mc(spec, strategy, trials, seed),
    }
}

pub fn acceptance_mc(
    spec: &HamiltonianSpec,
    strategy: &ProverStrategy,
    trials: u64,
    seed: u64,
) -> Result<AcceptanceResult> {
    let n = spec.n();
    strategy.validate(n)?;
    acceptance_mc_with(spec, trials, seed, |h, m| {
        strategy.outcome_distribution_pure(n, &bb84_state(h, &bits_of(m, n))?)
    })
}
