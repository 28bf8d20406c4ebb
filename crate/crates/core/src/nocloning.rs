//! Cloners built from classical encodings, and the bounds they must obey.
//!
//! A classical encoding can be copied, so `W = Dec^{⊗k} ∘ V ∘ Sim` would
//! approximately clone the target outputs. The checks here evaluate `W`
//! exactly and compare against the no-cloning bounds with measured `δ̂, ε̂`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::channel::Channel;
use crate::qcore::gates;
use crate::qcore::matrix::{ComplexMatrix, C64};
use crate::qcore::state::{trace_distance, DensityMatrix, PureState, DENSITY_QUBIT_CAP};
use crate::qre::{measure_params, QreScheme, SchemeParams};

pub const BOUND_SLACK: f64 = 1e-8;
/// Fidelity above which an output counts as a given pure state.
const MATCH_TOL: f64 = 1e-9;

/// `ρ ↦ Σ_z ⟨z|ρ|z⟩ |z⟩⟨z|^{⊗k}` on `n` qubits.
pub fn basis_copier(k: usize, n: usize) -> Result<Channel> {
    if k == 0 {
        return Err(Error::InvalidConfig("copy count must be at least 1".into()));
    }
    if k * n > DENSITY_QUBIT_CAP {
        return Err(Error::DimensionCap {
            what: "copier output qubits",
            got: k * n,
            cap: DENSITY_QUBIT_CAP,
        });
    }
    let d = 1usize << n;
    let dk = 1usize << (k * n);
    let kraus = (0..d)
        .map(|z| {
            let copies = (0..k).fold(0usize, |acc, _| (acc << n) | z);
            let mut m = ComplexMatrix::zeros(dk, d);
            m[(copies, z)] = C64::new(1.0, 0.0);
            m
        })
        .collect();
    Channel::new(n, k * n, kraus)
}

/// `W = Dec^{⊗k} ∘ V ∘ Sim`.
pub fn build_cloner(s: &QreScheme, k: usize) -> Result<Channel> {
    if !s.is_classical()? {
        log::warn!(
            "scheme `{}` has a non-classical encoding; copying its labels is lossy",
            s.name()
        );
    }
    let copier = basis_copier(k, s.encode().output_qubits())?;
    let decoders = s.decode().tensor_power(k);
    if decoders.output_qubits() > DENSITY_QUBIT_CAP {
        return Err(Error::DimensionCap {
            what: "cloner output qubits",
            got: decoders.output_qubits(),
            cap: DENSITY_QUBIT_CAP,
        });
    }
    s.simulator().then(&copier)?.then(&decoders)
}

fn power_state(psi: &PureState, k: usize) -> Result<PureState> {
    PureState::tensor_all(std::iter::repeat_n(psi, k))
}

/// Bound values at one `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClonerReport {
    pub k: usize,
    pub a: f64,
    /// `½‖W(ψ_i) − ψ_i^{⊗k}‖₁` per family member.
    pub lhs: Vec<f64>,
    /// `ε̂ + kδ̂/a + k√a`.
    pub rhs_statistical: f64,
    /// `√(ε̂ + kδ̂/a + k√a)`.
    pub rhs_computational: f64,
    /// `⟨ψ_i^{⊗k}|W(ψ_i)|ψ_i^{⊗k}⟩`.
    pub fidelities: Vec<f64>,
    /// `rhs_statistical − max lhs`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloneBoundReport {
    pub scheme: String,
    pub params: SchemeParams,
    pub k: usize,
    pub points: Vec<ClonerReport>,
    pub worst_margin: f64,
    pub holds: bool,
}

pub fn statistical_rhs(eps: f64, delta: f64, k: usize, a: f64) -> f64 {
    eps + k as f64 * delta / a + k as f64 * a.sqrt()
}

/// The default grid `{1e-4, 1e-3, 1e-2, 0.1, 0.25, √δ̂, 1}`, positive entries only.
pub fn default_a_grid(delta_hat: f64) -> Vec<f64> {
    let mut grid = vec![1e-4, 1e-3, 1e-2, 0.1, 0.25, delta_hat.sqrt(), 1.0];
    grid.retain(|&a| a > 0.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Per-member `(lhs, fidelity)` of the cloner against `ψ_i^{⊗k}`.
fn cloner_outputs(s: &QreScheme, w: &Channel, k: usize) -> Result<Vec<(f64, f64)>> {
    let outputs = s.pure_outputs()?;
    outputs
        .par_iter()
        .map(|psi| {
            let cloned = w.apply(&psi.to_density()?)?;
            let target = power_state(psi, k)?;
            let lhs = trace_distance(&cloned, &target.to_density()?)?;
            let fid = cloned.expectation_pure(&target)?;
            Ok((lhs, fid))
        })
        .collect()
}

pub fn verify_clone_bound(s: &QreScheme, k: usize, a_grid: &[f64]) -> Result<CloneBoundReport> {
    if let Some(&bad) = a_grid.iter().find(|&&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidConfig(format!("grid value {bad} must be positive")));
    }
    let params = measure_params(s)?;
    let w = build_cloner(s, k)?;
    let per_member = cloner_outputs(s, &w, k)?;
    let lhs: Vec<f64> = per_member.iter().map(|p| p.0).collect();
    let fidelities: Vec<f64> = per_member.iter().map(|p| p.1).collect();
    let worst_lhs = lhs.iter().copied().fold(0.0, f64::max);
    let points: Vec<ClonerReport> = a_grid
        .iter()
        .map(|&a| {
            let rhs = statistical_rhs(params.eps_hat, params.delta_hat, k, a);
            ClonerReport {
                k,
                a,
                lhs: lhs.clone(),
                rhs_statistical: rhs,
                rhs_computational: rhs.sqrt(),
                fidelities: fidelities.clone(),
                margin: rhs - worst_lhs,
            }
        })
        .collect();
    let worst_margin = points.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min);
    Ok(CloneBoundReport {
        scheme: s.name().to_string(),
        params,
        k,
        holds: worst_margin + BOUND_SLACK > 0.0,
        points,
        worst_margin,
    })
}

/// Distinguishing tests on the encoded register: computational-basis
/// projectors, product Breidbart projectors, and `|ψ_i⟩^{⊗k}` pulled back
/// through `Dec^{⊗k} ∘ V`.
pub fn privacy_tests(s: &QreScheme, k: usize) -> Result<Vec<ComplexMatrix>> {
    let e = s.encode().output_qubits();
    let d = 1usize << e;
    let mut tests = Vec::new();
    for z in 0..d {
        let mut p = ComplexMatrix::zeros(d, d);
        p[(z, z)] = C64::new(1.0, 0.0);
        tests.push(p);
    }
    let basis = gates::breidbart_basis();
    for b in 0..d {
        let factors: Vec<ComplexMatrix> = (0..e)
            .map(|q| ComplexMatrix::projector(&basis[(b >> (e - 1 - q)) & 1]))
            .collect();
        tests.push(ComplexMatrix::kron_all(&factors));
    }
    let pull = basis_copier(k, e)?.then(&s.decode().tensor_power(k))?;
    for psi in s.pure_outputs()? {
        let target = power_state(&psi, k)?;
        tests.push(pull.apply_adjoint(&ComplexMatrix::projector(target.amplitudes()))?);
    }
    Ok(tests)
}

/// Largest `|Tr[Π Sim(F ρ_j)] − Tr[Π F̂ ρ_j]|` over the finite test family and members.
pub fn computational_eps(s: &QreScheme, k: usize) -> Result<f64> {
    let tests = privacy_tests(s, k)?;
    let mut worst = 0.0_f64;
    for rho in s.family() {
        let f = s.target().apply(rho)?;
        let simulated = s.simulator().apply(&f)?;
        let encoded = s.encode().apply(rho)?;
        for t in &tests {
            let adv = (simulated.expectation(t)? - encoded.expectation(t)?).abs();
            worst = worst.max(adv);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityCheck {
    pub k: usize,
    pub a: f64,
    pub fidelities: Vec<f64>,
    pub eps_statistical: f64,
    pub eps_computational: f64,
    /// `1 − ε − kδ̂/a − k√a` with the computational `ε`, the tighter of the two.
    pub lower_bound: f64,
    pub holds: bool,
}

pub fn fidelity_check(s: &QreScheme, k: usize, a: f64) -> Result<FidelityCheck> {
    if a.is_nan() || a <= 0.0 {
        return Err(Error::InvalidConfig(format!("a = {a} must be positive")));
    }
    let params = measure_params(s)?;
    let w = build_cloner(s, k)?;
    let fidelities: Vec<f64> = cloner_outputs(s, &w, k)?.into_iter().map(|p| p.1).collect();
    let eps_comp = computational_eps(s, k)?;
    let lower_bound = 1.0 - statistical_rhs(eps_comp, params.delta_hat, k, a);
    let stat_bound = 1.0 - statistical_rhs(params.eps_hat, params.delta_hat, k, a);
    let holds = fidelities
        .iter()
        .all(|&f| f >= lower_bound - BOUND_SLACK && f >= stat_bound - BOUND_SLACK);
    Ok(FidelityCheck {
        k,
        a,
        fidelities,
        eps_statistical: params.eps_hat,
        eps_computational: eps_comp,
        lower_bound,
        holds,
    })
}

/// True iff `⟨ψ^{⊗k}|W(ψ)|ψ^{⊗k}⟩ ≥ 1 − ε − kδ̂/a − k√a` for every member.
pub fn fidelity_lower_bound_check(s: &QreScheme, k: usize, a: f64) -> Result<bool> {
    Ok(fidelity_check(s, k, a)?.holds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapMass {
    pub mass: f64,
    pub bound: f64,
}

impl GapMass {
    pub fn holds(&self) -> bool {
        self.mass <= self.bound + BOUND_SLACK
    }
}

/// Encoder mass on labels that decode badly: `Σ_{z∈G} ⟨z|F̂(ρ_i)|z⟩` with
/// `G = {z : 1 − ⟨ψ_i|Dec(|z⟩⟨z|)|ψ_i⟩ ≥ a}`, against `δ̂/a`.
pub fn gap_set_mass(s: &QreScheme, index: usize, a: f64) -> Result<GapMass> {
    let rho = s.family().get(index).ok_or(Error::IndexOutOfRange {
        index,
        qubits: s.family().len(),
    })?;
    let encoded = s.encode().apply(rho)?;
    if !encoded.is_diagonal(crate::qre::CLASSICAL_TOL) {
        return Err(Error::NonClassicalEncoding(format!(
            "F̂(ρ_{index}) has off-diagonal entries"
        )));
    }
    let psi = &s.pure_outputs()?[index];
    let e = s.encode().output_qubits();
    let mut mass = 0.0;
    for (z, p) in encoded.diagonal().into_iter().enumerate() {
        let decoded = s.decode().apply(&DensityMatrix::basis(e, z)?)?;
        if 1.0 - decoded.expectation_pure(psi)? >= a {
            mass += p;
        }
    }
    let delta = measure_params(s)?.delta_hat;
    Ok(GapMass { mass, bound: delta / a })
}

pub const SQRT_THREE_QUARTERS: f64 = 0.866_025_403_784_438_6;

/// `√(3/4) − √(1/2) ≤ 2√(ε + 2√δ + 2δ^{1/4})` for given parameters.
pub fn chain_inequality_holds(eps: f64, delta: f64) -> bool {
    let lhs = SQRT_THREE_QUARTERS - std::f64::consts::FRAC_1_SQRT_2;
    lhs <= 2.0 * (eps + 2.0 * delta.sqrt() + 2.0 * delta.powf(0.25)).sqrt() + BOUND_SLACK
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    /// `½‖|+⟩⟨+|^{⊗2} − |0⟩⟨0|^{⊗2}‖₁`.
    pub pair_distance: f64,
    /// `½‖|+⟩⟨+| − |0⟩⟨0|‖₁`.
    pub single_distance: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the two-copy chain for a scheme whose outputs include `|0⟩` and `|+⟩`.
pub fn chain_inequality_report(s: &QreScheme) -> Result<ChainReport> {
    let outputs = s.pure_outputs()?;
    let zero = PureState::zero(1)?;
    let plus = PureState::plus(1)?;
    let has = |target: &PureState| {
        outputs
            .iter()
            .any(|o| o.qubits() == 1 && o.fidelity(target).map(|f| f > 1.0 - MATCH_TOL).unwrap_or(false))
    };
    if !has(&zero) || !has(&plus) {
        return Err(Error::MissingStates(format!(
            "scheme `{}` has no family members mapping to both |0⟩ and |+⟩",
            s.name()
        )));
    }
    let params = measure_params(s)?;
    let pair_distance = trace_distance(
        &power_state(&plus, 2)?.to_density()?,
        &power_state(&zero, 2)?.to_density()?,
    )?;
    let single_distance = trace_distance(&plus.to_density()?, &zero.to_density()?)?;
    let (eps, delta) = (params.eps_hat, params.delta_hat);
    let rhs = 2.0 * (eps + 2.0 * delta.sqrt() + 2.0 * delta.powf(0.25)).sqrt();
    Ok(ChainReport {
        pair_distance,
        single_distance,
        rhs,
        holds: pair_distance - single_distance <= rhs + BOUND_SLACK,
    })
}

pub fn chain_inequality_check(s: &QreScheme) -> Result<bool> {
    Ok(chain_inequality_report(s)?.holds)
}
