//! Linear-graph MBQC, the BFK and MF blind protocols, and the
//! server-output attack.
//!
//! Measuring the first wire qubit at angle `θ` with outcome `s` applies
//! `X^s H diag(1, e^{−iθ})` to the logical state carried by the rest of the
//! wire. Pending byproducts `X^a Z^b` are absorbed by measuring at
//! `(−1)^a θ + bπ`, leaving `X^s Z^a` for the next step.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::harness::seed::trial_rng;
use crate::qcore::gates;
use crate::qcore::matrix::{ComplexMatrix, C64};
use crate::qcore::state::{trace_distance, DensityMatrix, PureState};

pub const GRAPH_QUBIT_CAP: usize = 12;
pub const RUN_QUBIT_CAP: usize = 8;
/// Largest wire for which the key-averaged server state is enumerated.
pub const AVERAGE_QUBIT_CAP: usize = 4;
const BRANCH_TOL: f64 = 1e-12;
const GAP_SEED: u64 = 0xB11D;

/// An angle `kπ/8`, with arithmetic mod 16.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngleOctant(u8);

impl AngleOctant {
    pub const ZERO: Self = Self(0);
    pub const PI: Self = Self(8);

    pub fn new(k: i64) -> Self {
        Self(k.rem_euclid(16) as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0 as f64 * PI / 8.0
    }

    /// `(−1)^flip · self + bπ`.
    pub fn adapted(self, flip: bool, b: bool) -> Self {
        let base = if flip { -(self.0 as i64) } else { self.0 as i64 };
        Self::new(base + if b { 8 } else { 0 })
    }
}

impl std::ops::Add for AngleOctant {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.0 as i64 + rhs.0 as i64)
    }
}

impl fmt::Display for AngleOctant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}π/8", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OtpKey {
    x: Vec<bool>,
    z: Vec<bool>,
}

impl OtpKey {
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

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            x: (0..n).map(|_| rng.random()).collect(),
            z: (0..n).map(|_| rng.random()).collect(),
        }
    }

    /// All `4^n` keys, in index order.
    pub fn all(n: usize) -> impl Iterator<Item = Self> {
        (0..1usize << (2 * n)).map(move |k| Self {
            x: (0..n).map(|j| (k >> (2 * n - 1 - j)) & 1 == 1).collect(),
            z: (0..n).map(|j| (k >> (n - 1 - j)) & 1 == 1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[bool] {
        &self.x
    }

    pub fn z(&self) -> &[bool] {
        &self.z
    }

    fn operator(&self) -> ComplexMatrix {
        gates::pauli_string(&self.x, &self.z)
    }
}

fn check_key(rho: &DensityMatrix, key: &OtpKey) -> Result<()> {
    if rho.qubits() != key.len() {
        return Err(Error::LengthMismatch {
            expected: rho.qubits(),
            got: key.len(),
        });
    }
    Ok(())
}

/// `(⊗ X^{x_j} Z^{z_j}) ρ (⊗ X^{x_j} Z^{z_j})†`.
pub fn qotp(rho: &DensityMatrix, key: &OtpKey) -> Result<DensityMatrix> {
    check_key(rho, key)?;
    Ok(DensityMatrix::from_trusted(
        rho.qubits(),
        key.operator().sandwich(rho.matrix()),
    ))
}

/// Inverse of [`qotp`].
pub fn qotp_unlock(rho: &DensityMatrix, key: &OtpKey) -> Result<DensityMatrix> {
    check_key(rho, key)?;
    Ok(DensityMatrix::from_trusted(
        rho.qubits(),
        key.operator().sandwich_adjoint(rho.matrix()),
    ))
}

/// `(Π CZ_{j,j+1}) |+⟩^{⊗n}`.
pub fn linear_graph_state(n: usize) -> Result<PureState> {
    rotated_graph(&vec![AngleOctant::ZERO; n])
}

/// `(Π CZ_{j,j+1}) ⊗_j |+_{θ_j}⟩`.
pub fn rotated_graph(thetas: &[AngleOctant]) -> Result<PureState> {
    rotated_graph_radians(&thetas.iter().map(|t| t.radians()).collect::<Vec<_>>())
}

pub fn rotated_graph_radians(thetas: &[f64]) -> Result<PureState> {
    let n = thetas.len();
    if n == 0 || n > GRAPH_QUBIT_CAP {
        return Err(Error::DimensionCap {
            what: "graph qubits",
            got: n,
            cap: GRAPH_QUBIT_CAP,
        });
    }
    let singles = thetas
        .iter()
        .map(|&t| PureState::single(gates::plus_theta(t)))
        .collect::<Result<Vec<_>>>()?;
    let mut psi = PureState::tensor_all(&singles)?;
    for j in 1..n {
        psi.apply_cz(j - 1, j)?;
    }
    Ok(psi)
}

/// Unnormalised post-state and probability when qubit 0 is measured in
/// `|±_θ⟩` with outcome `s` (`+` is 0).
fn branch(state: &PureState, angle: f64, s: bool) -> Result<(f64, Vec<C64>)> {
    if state.qubits() < 2 {
        return Err(Error::InvalidState(
            "a wire step needs the measured qubit plus at least one more".into(),
        ));
    }
    let half = state.dim() / 2;
    let (lo, hi) = state.amplitudes().split_at(half);
    let sign = if s { -1.0 } else { 1.0 };
    let phase = C64::from_polar(sign * std::f64::consts::FRAC_1_SQRT_2, -angle);
    let amps: Vec<C64> = lo
        .iter()
        .zip(hi)
        .map(|(&a, &b)| a * std::f64::consts::FRAC_1_SQRT_2 + b * phase)
        .collect();
    let p = amps.iter().map(|a| a.norm_sqr()).sum();
    Ok((p, amps))
}

pub fn mbqc_branch_probability(state: &PureState, angle: f64, s: bool) -> Result<f64> {
    Ok(branch(state, angle, s)?.0)
}

/// Measures qubit 0 at `angle`, keeping outcome `s`; the qubit is removed.
pub fn mbqc_step_forced(state: &PureState, angle: f64, s: bool) -> Result<PureState> {
    let (p, amps) = branch(state, angle, s)?;
    if p < BRANCH_TOL {
        return Err(Error::ZeroProbabilityBranch);
    }
    PureState::normalized(amps)
}

/// Measures qubit 0 at `angle` with a Born-sampled outcome.
pub fn mbqc_step<R: Rng + ?Sized>(state: &PureState, angle: f64, rng: &mut R) -> Result<(bool, PureState)> {
    let p1 = branch(state, angle, true)?.0;
    let s = rng.random::<f64>() < p1;
    Ok((s, mbqc_step_forced(state, angle, s)?))
}

/// `X^s H diag(1, e^{−iθ})`.
pub fn logical_step(angle: f64, s: bool) -> ComplexMatrix {
    let g = &gates::h() * &gates::phase(-angle);
    if s {
        &gates::x() * &g
    } else {
        g
    }
}

/// Product of the byproduct-free logical steps, first angle applied first.
pub fn target_unitary(angles: &[AngleOctant]) -> ComplexMatrix {
    angles
        .iter()
        .fold(gates::id(), |acc, a| &logical_step(a.radians(), false) * &acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Bfk,
    Mf,
}

impl Backend {
    pub const ALL: [Backend; 2] = [Backend::Bfk, Backend::Mf];
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Bfk => "bfk",
            Backend::Mf => "mf",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bfk" => Ok(Backend::Bfk),
            "mf" => Ok(Backend::Mf),
            other => Err(Error::Unknown {
                kind: "backend",
                name: other.to_string(),
            }),
        }
    }
}

/// One measured wire qubit as seen by both parties.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub target: AngleOctant,
    pub adapted: AngleOctant,
    /// Client's hiding rotation (BFK only).
    pub theta: Option<AngleOctant>,
    pub r: Option<bool>,
    /// Angle announced to the server (BFK) or used by the client (MF).
    pub delta: AngleOctant,
    /// Raw measurement outcome.
    pub outcome: bool,
    /// Logical outcome after removing the `r` flip.
    pub s: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlindRunResult {
    pub backend: Backend,
    pub xi: f64,
    pub steps: Vec<Step>,
    /// Output-qubit hiding rotation, `0` or `π` (BFK only).
    pub output_theta: Option<AngleOctant>,
    pub key: OtpKey,
    /// Server's output qubit before the key is revealed.
    pub server_state: DensityMatrix,
    /// Server's output qubit after applying the revealed key.
    pub unlocked_state: DensityMatrix,
    pub intended_output: PureState,
    pub deviated_target: PureState,
    pub fidelity_to_deviated_target: f64,
}

fn check_run(angles: &[AngleOctant], n: usize) -> Result<()> {
    if !(2..=RUN_QUBIT_CAP).contains(&n) {
        return Err(Error::DimensionCap {
            what: "wire qubits",
            got: n,
            cap: RUN_QUBIT_CAP,
        });
    }
    if angles.len() != n - 1 {
        return Err(Error::LengthMismatch {
            expected: n - 1,
            got: angles.len(),
        });
    }
    Ok(())
}

fn finish(
    backend: Backend,
    xi: f64,
    angles: &[AngleOctant],
    steps: Vec<Step>,
    output_theta: Option<AngleOctant>,
    key: OtpKey,
    out: PureState,
) -> Result<BlindRunResult> {
    let server_state = out.to_density()?;
    let unlocked_state = qotp_unlock(&server_state, &key)?;
    let plus = PureState::plus(1)?;
    let u = target_unitary(angles);
    let intended_output = plus.apply_unitary(&u)?;
    let deviated_target = plus.apply_unitary(&(&u * &gates::rz_half(xi)))?;
    let fidelity = unlocked_state.expectation_pure(&deviated_target)?.clamp(0.0, 1.0);
    Ok(BlindRunResult {
        backend,
        xi,
        steps,
        output_theta,
        key,
        server_state,
        unlocked_state,
        intended_output,
        deviated_target,
        fidelity_to_deviated_target: fidelity,
    })
}

/// BFK: the client sends `|+_{θ_j}⟩` states and announces `δ_j = φ'_j + θ_j + r_jπ`.
/// A nonzero `xi` makes the server measure the first qubit at `δ_1 + ξ`.
pub fn bfk_run<R: Rng + ?Sized>(angles: &[AngleOctant], n: usize, rng: &mut R, xi: f64) -> Result<BlindRunResult> {
    check_run(angles, n)?;
    let thetas: Vec<AngleOctant> = (0..n - 1).map(|_| AngleOctant::new(rng.random_range(0..8))).collect();
    let output_pad: bool = rng.random();
    let output_theta = if output_pad { AngleOctant::PI } else { AngleOctant::ZERO };
    let mut all = thetas.clone();
    all.push(output_theta);
    let mut state = rotated_graph(&all)?;
    let (mut bx, mut bz) = (false, false);
    let mut steps = Vec::with_capacity(n - 1);
    for (j, (&phi, &theta)) in angles.iter().zip(&thetas).enumerate() {
        let r: bool = rng.random();
        let adapted = phi.adapted(bx, bz);
        let delta = adapted + theta + if r { AngleOctant::PI } else { AngleOctant::ZERO };
        let shift = if j == 0 { xi } else { 0.0 };
        let (outcome, post) = mbqc_step(&state, delta.radians() + shift, rng)?;
        state = post;
        let s = outcome ^ r;
        (bx, bz) = (s, bx);
        steps.push(Step {
            target: phi,
            adapted,
            theta: Some(theta),
            r: Some(r),
            delta,
            outcome,
            s,
        });
    }
    let key = OtpKey::new(vec![bx], vec![bz ^ output_pad])?;
    finish(Backend::Bfk, xi, angles, steps, Some(output_theta), key, state)
}

/// MF: the server prepares the graph and sends the measured qubits to the
/// client, keeping the last one. A nonzero `xi` applies `e^{iξZ/2}` to the
/// first qubit before it is sent.
pub fn mf_run<R: Rng + ?Sized>(angles: &[AngleOctant], n: usize, rng: &mut R, xi: f64) -> Result<BlindRunResult> {
    check_run(angles, n)?;
    let mut state = linear_graph_state(n)?;
    if xi != 0.0 {
        state.apply_1q(&gates::rz_half(xi), 0)?;
    }
    let (mut bx, mut bz) = (false, false);
    let mut steps = Vec::with_capacity(n - 1);
    for &phi in angles {
        let adapted = phi.adapted(bx, bz);
        let (s, post) = mbqc_step(&state, adapted.radians(), rng)?;
        state = post;
        (bx, bz) = (s, bx);
        steps.push(Step {
            target: phi,
            adapted,
            theta: None,
            r: None,
            delta: adapted,
            outcome: s,
            s,
        });
    }
    let key = OtpKey::new(vec![bx], vec![bz])?;
    finish(Backend::Mf, xi, angles, steps, None, key, state)
}

pub fn run<R: Rng + ?Sized>(
    backend: Backend,
    angles: &[AngleOctant],
    n: usize,
    rng: &mut R,
    xi: f64,
) -> Result<BlindRunResult> {
    match backend {
        Backend::Bfk => bfk_run(angles, n, rng, xi),
        Backend::Mf => mf_run(angles, n, rng, xi),
    }
}

/// Wire angles for the identity on a 3-qubit wire (`H·H`).
pub fn identity_program() -> Vec<AngleOctant> {
    vec![AngleOctant::ZERO, AngleOctant::ZERO]
}

/// Wire angles for `X` on a 3-qubit wire (`H Z H`).
pub fn x_program() -> Vec<AngleOctant> {
    vec![AngleOctant::ZERO, AngleOctant::PI]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    pub backend: Backend,
    pub xi: f64,
    pub out_identity: DensityMatrix,
    pub out_x: DensityMatrix,
    pub fidelity_identity: f64,
    pub fidelity_x: f64,
    pub gap: f64,
}

/// Attacks the identity and `X` programs (both fix `|+⟩`) and returns
/// `½·D(out_I, out_X)`, a lower bound on any simulator's error.
pub fn blindness_gap_with<R: Rng + ?Sized>(backend: Backend, xi: f64, rng: &mut R) -> Result<GapResult> {
    let ri = run(backend, &identity_program(), 3, rng, xi)?;
    let rx = run(backend, &x_program(), 3, rng, xi)?;
    let gap = 0.5 * trace_distance(&ri.unlocked_state, &rx.unlocked_state)?;
    Ok(GapResult {
        backend,
        xi,
        fidelity_identity: ri.fidelity_to_deviated_target,
        fidelity_x: rx.fidelity_to_deviated_target,
        out_identity: ri.unlocked_state,
        out_x: rx.unlocked_state,
        gap,
    })
}

pub fn blindness_gap(backend: Backend, xi: f64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(GAP_SEED);
    Ok(blindness_gap_with(backend, xi, &mut rng)?.gap)
}

/// Server's output qubit before the key arrives, averaged over every BFK
/// client choice and weighted by the Born probabilities of the outcomes.
pub fn bfk_average_server_state(angles: &[AngleOctant], n: usize) -> Result<DensityMatrix> {
    check_run(angles, n)?;
    if n > AVERAGE_QUBIT_CAP {
        return Err(Error::DimensionCap {
            what: "averaged wire qubits",
            got: n,
            cap: AVERAGE_QUBIT_CAP,
        });
    }
    let mut acc = ComplexMatrix::zeros(2, 2);
    for pad in [false, true] {
        let mut graph = linear_graph_state(n)?;
        if pad {
            graph.apply_1q(&gates::z(), n - 1)?;
        }
        average_branches(angles, graph, 0.5, false, false, &mut acc)?;
    }
    Ok(DensityMatrix::from_trusted(1, acc))
}

fn average_branches(
    angles: &[AngleOctant],
    state: PureState,
    weight: f64,
    bx: bool,
    bz: bool,
    acc: &mut ComplexMatrix,
) -> Result<()> {
    let Some((&phi, rest)) = angles.split_first() else {
        *acc = &*acc + &ComplexMatrix::projector(state.amplitudes()).scale_re(weight);
        return Ok(());
    };
    let choice_weight = weight / 16.0;
    for theta in (0..8).map(AngleOctant::new) {
        let mut rotated = state.clone();
        rotated.apply_1q(&gates::phase(theta.radians()), 0)?;
        for r in [false, true] {
            let delta = phi.adapted(bx, bz) + theta + if r { AngleOctant::PI } else { AngleOctant::ZERO };
            for outcome in [false, true] {
                let (p, amps) = branch(&rotated, delta.radians(), outcome)?;
                if p < BRANCH_TOL {
                    continue;
                }
                let post = PureState::normalized(amps)?;
                let s = outcome ^ r;
                average_branches(rest, post, choice_weight * p, s, bx, acc)?;
            }
        }
    }
    Ok(())
}

/// Histogram over the 16 octants of the first announced angle in `samples`
/// honest BFK runs, each seeded from `seed` and its index.
pub fn first_delta_histogram(angles: &[AngleOctant], n: usize, samples: u64, seed: u64) -> Result<[u64; 16]> {
    check_run(angles, n)?;
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let r = bfk_run(angles, n, &mut rng, 0.0)?;
            Ok(r.steps[0].delta.value())
        })
        .try_fold(
            || [0u64; 16],
            |mut acc, d: Result<u8>| {
                acc[d? as usize] += 1;
                Ok(acc)
            },
        )
        .try_reduce(
            || [0u64; 16],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
}

/// Pearson statistic and p-value of `counts` against the uniform distribution.
pub fn chi_square_uniform(counts: &[u64]) -> Result<(f64, f64)> {
    let total: u64 = counts.iter().sum();
    if counts.len() < 2 || total == 0 {
        return Err(Error::DegenerateDistribution(total as f64));
    }
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dist =
        ChiSquared::new((counts.len() - 1) as f64).map_err(|e| Error::InvalidConfig(format!("chi-square: {e}")))?;
    Ok((stat, dist.sf(stat)))
}

/// Total-variation distance between two empirical histograms.
pub fn total_variation(a: &[u64], b: &[u64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (ta, tb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if ta == 0.0 || tb == 0.0 {
        return Err(Error::DegenerateDistribution(0.0));
    }
    Ok(0.5
        * a.iter()
            .zip(b)
            .map(|(&x, &y)| (x as f64 / ta - y as f64 / tb).abs())
            .sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::random::random_pure;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn fid(a: &PureState, b: &PureState) -> f64 {
        a.fidelity(b).unwrap()
    }

    #[test]
    fn octant_arithmetic() {
        assert_eq!(AngleOctant::new(17).value(), 1);
        assert_eq!(AngleOctant::new(-1).value(), 15);
        assert_eq!((AngleOctant::new(9) + AngleOctant::new(9)).value(), 2);
        assert_eq!(AngleOctant::new(3).adapted(true, false).value(), 13);
        assert_eq!(AngleOctant::new(3).adapted(true, true).value(), 5);
        assert_eq!(AngleOctant::new(3).adapted(false, true).value(), 11);
    }

    #[test]
    fn graph_examples() {
        assert!(fid(&linear_graph_state(1).unwrap(), &PureState::plus(1).unwrap()) > 1.0 - 1e-12);
        let g2 = linear_graph_state(2).unwrap();
        let h = C64::new(0.5, 0.0);
        let expected = PureState::new(vec![h, h, h, -h]).unwrap();
        assert!(fid(&g2, &expected) > 1.0 - 1e-12);
        let n = 4;
        let g = linear_graph_state(n).unwrap();
        for j in 0..n {
            let mut s = g.clone();
            s.apply_1q(&gates::x(), j).unwrap();
            if j > 0 {
                s.apply_1q(&gates::z(), j - 1).unwrap();
            }
            if j + 1 < n {
                s.apply_1q(&gates::z(), j + 1).unwrap();
            }
            assert!((g.inner(&s).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-9);
        }
        assert!(linear_graph_state(13).is_err());
    }

    #[test]
    fn rotated_graph_examples() {
        let r = rotated_graph(&[AngleOctant::new(4)]).unwrap();
        let expected = PureState::single([C64::new(0.5_f64.sqrt(), 0.0), C64::new(0.0, 0.5_f64.sqrt())]).unwrap();
        assert!(fid(&r, &expected) > 1.0 - 1e-12);
        let mut g = rng(3);
        for _ in 0..20 {
            let thetas: Vec<AngleOctant> = (0..3).map(|_| AngleOctant::new(g.random_range(0..16))).collect();
            let mut other = linear_graph_state(3).unwrap();
            for (j, t) in thetas.iter().enumerate() {
                other.apply_1q(&gates::rz_half(-t.radians()), j).unwrap();
            }
            assert!(fid(&rotated_graph(&thetas).unwrap(), &other) > 1.0 - 1e-9);
        }
    }

    #[test]
    fn step_implements_logical_gate() {
        let mut g = rng(5);
        for _ in 0..20 {
            let psi = random_pure(1, &mut g);
            let mut wire = psi.tensor(&PureState::plus(1).unwrap()).unwrap();
            wire.apply_cz(0, 1).unwrap();
            let angle: f64 = g.random_range(0.0..2.0 * PI);
            for s in [false, true] {
                let post = mbqc_step_forced(&wire, angle, s).unwrap();
                let expected = psi.apply_unitary(&logical_step(angle, s)).unwrap();
                assert!(fid(&post, &expected) > 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn step_zero_angle_examples() {
        let mut wire = PureState::zero(1)
            .unwrap()
            .tensor(&PureState::plus(1).unwrap())
            .unwrap();
        wire.apply_cz(0, 1).unwrap();
        let post = mbqc_step_forced(&wire, 0.0, false).unwrap();
        assert!(fid(&post, &PureState::plus(1).unwrap()) > 1.0 - 1e-12);
        assert!((mbqc_branch_probability(&wire, 0.0, false).unwrap() - 0.5).abs() < 1e-12);
        let p = PureState::zero(2).unwrap();
        assert!(matches!(
            mbqc_step_forced(&PureState::plus(2).unwrap(), 0.0, true),
            Err(Error::ZeroProbabilityBranch)
        ));
        assert!(mbqc_step_forced(&p, 0.0, true).is_ok());
    }

    #[test]
    fn hiding_rotation_substitution() {
        let mut g = rng(11);
        for _ in 0..100 {
            let n = g.random_range(2..=4);
            let phi = AngleOctant::new(g.random_range(0..16));
            let theta = AngleOctant::new(g.random_range(0..8));
            let r: bool = g.random();
            let rpi = if r { AngleOctant::PI } else { AngleOctant::ZERO };
            let mut thetas = vec![AngleOctant::ZERO; n];
            thetas[0] = theta;
            let bob = rotated_graph(&thetas).unwrap();
            let plain = linear_graph_state(n).unwrap();
            for b in [false, true] {
                let lhs = mbqc_step_forced(&bob, (phi + theta + rpi).radians(), b).unwrap();
                let rhs = mbqc_step_forced(&plain, (phi + rpi).radians(), b).unwrap();
                assert!(fid(&lhs, &rhs) > 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn qotp_examples() {
        let rho = random_pure(2, &mut rng(1)).to_density().unwrap();
        let id = qotp(&rho, &OtpKey::zeros(2)).unwrap();
        assert!(id.matrix().approx_eq(rho.matrix(), 1e-15));
        for key in OtpKey::all(2) {
            let back = qotp_unlock(&qotp(&rho, &key).unwrap(), &key).unwrap();
            assert!(back.matrix().approx_eq(rho.matrix(), 1e-10));
        }
        let single = random_pure(1, &mut rng(2)).to_density().unwrap();
        let mut acc = ComplexMatrix::zeros(2, 2);
        for key in OtpKey::all(1) {
            acc = &acc + &qotp(&single, &key).unwrap().matrix().scale_re(0.25);
        }
        assert!(acc.approx_eq(&ComplexMatrix::identity(2).scale_re(0.5), 1e-12));
        let flipped = qotp(
            &DensityMatrix::basis(1, 0).unwrap(),
            &OtpKey::new(vec![true], vec![false]).unwrap(),
        )
        .unwrap();
        assert!(flipped
            .matrix()
            .approx_eq(DensityMatrix::basis(1, 1).unwrap().matrix(), 1e-15));
        assert!(matches!(
            OtpKey::new(vec![true], vec![]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(qotp(&single, &OtpKey::zeros(2)).is_err());
    }

    #[test]
    fn honest_runs_decode_target() {
        let mut g = rng(7);
        for backend in Backend::ALL {
            for n in [2, 3, 4] {
                for _ in 0..10 {
                    let angles: Vec<AngleOctant> =
                        (0..n - 1).map(|_| AngleOctant::new(g.random_range(0..16))).collect();
                    let r = run(backend, &angles, n, &mut g, 0.0).unwrap();
                    assert!(r.fidelity_to_deviated_target > 1.0 - 1e-9);
                    assert!(r.unlocked_state.expectation_pure(&r.intended_output).unwrap() > 1.0 - 1e-9);
                    let padded = qotp(&r.intended_output.to_density().unwrap(), &r.key).unwrap();
                    assert!(padded.matrix().approx_eq(r.server_state.matrix(), 1e-9));
                }
            }
        }
    }

    #[test]
    fn attack_targets() {
        let mut g = rng(9);
        let xi = PI / 2.0;
        let plus = PureState::plus(1).unwrap();
        let ui = plus.apply_unitary(&gates::rz_half(xi)).unwrap();
        let ux = plus.apply_unitary(&gates::rz_half(-xi)).unwrap();
        for backend in Backend::ALL {
            let ri = run(backend, &identity_program(), 3, &mut g, xi).unwrap();
            let rx = run(backend, &x_program(), 3, &mut g, xi).unwrap();
            assert!(ri.unlocked_state.expectation_pure(&ui).unwrap() > 1.0 - 1e-9);
            assert!(rx.unlocked_state.expectation_pure(&ux).unwrap() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn gap_values() {
        for backend in Backend::ALL {
            assert!((blindness_gap(backend, PI / 2.0).unwrap() - 0.5).abs() < 1e-9);
            assert!(blindness_gap(backend, 0.0).unwrap().abs() < 1e-9);
            let expected = (PI / 4.0).sin() / 2.0;
            assert!((blindness_gap(backend, PI / 4.0).unwrap() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn backends_agree_after_unlock() {
        let mut g = rng(13);
        for _ in 0..10 {
            let angles: Vec<AngleOctant> = (0..2).map(|_| AngleOctant::new(g.random_range(0..16))).collect();
            let xi = g.random_range(0.0..2.0 * PI);
            let a = bfk_run(&angles, 3, &mut g, xi).unwrap();
            let b = mf_run(&angles, 3, &mut g, xi).unwrap();
            assert!(trace_distance(&a.unlocked_state, &b.unlocked_state).unwrap() < 1e-9);
        }
    }

    #[test]
    fn averaged_server_state_is_maximally_mixed() {
        for angles in [
            identity_program(),
            x_program(),
            vec![AngleOctant::new(3), AngleOctant::new(5)],
        ] {
            let avg = bfk_average_server_state(&angles, 3).unwrap();
            assert!(avg.matrix().approx_eq(&ComplexMatrix::identity(2).scale_re(0.5), 1e-9));
        }
    }

    #[test]
    fn run_rejects_bad_lengths() {
        let mut g = rng(0);
        assert!(matches!(
            bfk_run(&[AngleOctant::ZERO], 3, &mut g, 0.0),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(mf_run(&[AngleOctant::ZERO; 8], 9, &mut g, 0.0).is_err());
        assert_eq!("mf".parse::<Backend>().unwrap(), Backend::Mf);
        assert!("x".parse::<Backend>().is_err());
    }

    #[test]
    fn first_delta_is_uniform_and_program_independent() {
        let a = first_delta_histogram(&identity_program(), 3, 20_000, 1).unwrap();
        let b = first_delta_histogram(&[AngleOctant::new(5), AngleOctant::new(3)], 3, 20_000, 2).unwrap();
        assert_eq!(a.iter().sum::<u64>(), 20_000);
        assert!(chi_square_uniform(&a).unwrap().1 > 1e-4);
        assert!(total_variation(&a, &b).unwrap() < 0.03);
        let skewed = [100, 0, 0, 0];
        assert!(chi_square_uniform(&skewed).unwrap().1 < 1e-10);
    }
}
