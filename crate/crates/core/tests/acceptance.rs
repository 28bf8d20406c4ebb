//! Acceptance suite: one line per criterion, nonzero exit on any failure.
#![allow(clippy::approx_constant)]

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use qrev_core::blind::{
    self, chi_square_uniform, first_delta_histogram, identity_program, linear_graph_state, mbqc_step_forced,
    rotated_graph, x_program, AngleOctant, Backend,
};
use qrev_core::hamiltonian::{energy, ground, instance};
use qrev_core::nocloning::{self, default_a_grid, statistical_rhs, verify_clone_bound};
use qrev_core::qcore::gates;
use qrev_core::qcore::random::{random_channel, random_density, random_hermitian, random_pure};
use qrev_core::qcore::{hermitian_eig, trace_distance};
use qrev_core::qre::{
    classical_zoo, depolarized_scheme, identity_scheme, measure_params, protocol_two_run, simulated_prover_run,
    TwoRoundStrategy, DEPOLARIZED_STRENGTH,
};
use qrev_core::verify::{acceptance_exact, Mode, ProverStrategy};
use qrev_core::{ComplexMatrix, DensityMatrix, Error, Povm, PureState, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = fn() -> Result<Outcome>;

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn completeness() -> Result<Outcome> {
    let start = Instant::now();
    let names = ["pair-anti", "pair-singlet", "chain3-anti", "chain3-mixed", "triangle3"];
    let mut worst = 0.0_f64;
    for name in names {
        let spec = instance(name)?;
        let e0 = ground(&spec)?.state;
        let p = acceptance_exact(&spec, &ProverStrategy::HonestTeleport(e0.clone()))?.probability;
        worst = worst.max((p - (1.0 - energy(&spec, &e0)?)).abs());
    }
    let elapsed = start.elapsed();
    Ok(check(
        worst <= 1e-8 && elapsed < Duration::from_secs(30),
        format!(
            "{} instances, max |p_acc - (1 - E0)| = {worst:.2e}, {:.2} s",
            names.len(),
            elapsed.as_secs_f64()
        ),
    ))
}

fn protocol_equivalence() -> Result<Outcome> {
    let mut identity_dev = 0.0_f64;
    let mut honest_margin = f64::INFINITY;
    let mut malicious_margin = f64::INFINITY;
    for name in ["pair-anti", "pair-singlet"] {
        let spec = instance(name)?;
        let e0 = ground(&spec)?.state;
        let p2 = acceptance_exact(&spec, &ProverStrategy::HonestTeleport(e0.clone()))?.probability;
        let id = identity_scheme(2)?;
        let p3 = protocol_two_run(&id, &spec, &TwoRoundStrategy::Honest(e0.clone()), Mode::Exact)?.probability;
        identity_dev = identity_dev.max((p3 - p2).abs());

        let noisy = depolarized_scheme(2, DEPOLARIZED_STRENGTH)?;
        let params = measure_params(&noisy)?;
        let p3 = protocol_two_run(&noisy, &spec, &TwoRoundStrategy::Honest(e0), Mode::Exact)?.probability;
        honest_margin = honest_margin.min(2.0 * params.delta_hat + 1e-8 - (p3 - p2).abs());
        for strat in ["fixed", "uniform", "wrong-basis"] {
            let s = ProverStrategy::from_name(strat, &spec)?;
            let a = simulated_prover_run(&noisy, &spec, &s, Mode::Exact)?.probability;
            let b = protocol_two_run(&noisy, &spec, &TwoRoundStrategy::Direct(s), Mode::Exact)?.probability;
            malicious_margin = malicious_margin.min(2.0 * params.eps_hat + 1e-8 - (a - b).abs());
        }
    }
    Ok(check(
        identity_dev <= 1e-9 && honest_margin >= 0.0 && malicious_margin >= 0.0,
        format!("identity deviation {identity_dev:.2e}; 2δ̂ slack {honest_margin:.3e}; 2ε̂ slack {malicious_margin:.3e}"),
    ))
}

fn clone_bound() -> Result<Outcome> {
    let mut worst_margin = f64::INFINITY;
    let mut mass_ok = true;
    let mut chains = Vec::new();
    let mut chains_ok = true;
    for s in classical_zoo()? {
        let params = measure_params(&s)?;
        let grid = default_a_grid(params.delta_hat);
        for k in 1..=3 {
            let r = verify_clone_bound(&s, k, &grid)?;
            for p in &r.points {
                for lhs in &p.lhs {
                    worst_margin = worst_margin.min(p.rhs_statistical + 1e-8 - lhs);
                }
            }
        }
        for &a in &grid {
            for i in 0..s.family().len() {
                mass_ok &= nocloning::gap_set_mass(&s, i, a)?.holds();
            }
        }
        match nocloning::chain_inequality_report(&s) {
            Ok(r) => {
                chains_ok &= r.holds;
                chains.push(format!("{} holds={}", s.name(), r.holds));
            }
            Err(Error::MissingStates(_)) => chains.push(format!("{} n/a (no |0>,|+> outputs)", s.name())),
            Err(e) => return Err(e),
        }
    }
    let zero = PureState::zero(1)?;
    let plus = PureState::plus(1)?;
    let pair = trace_distance(&plus.tensor(&plus)?.to_density()?, &zero.tensor(&zero)?.to_density()?)?;
    let single = trace_distance(&plus.to_density()?, &zero.to_density()?)?;
    let constants_ok = (pair - 0.866_025_4).abs() <= 1e-7 && (single - 0.707_106_8).abs() <= 1e-7;
    // The strict inequality needs a positive margin once the slack is removed.
    Ok(check(
        worst_margin > 0.0 && mass_ok && chains_ok && constants_ok,
        format!(
            "min margin {worst_margin:.3e}; mass check {mass_ok}; chain [{}]; constants {pair:.7} {single:.7}",
            chains.join(", ")
        ),
    ))
}

fn fidelity_bound() -> Result<Outcome> {
    let mut worst = f64::INFINITY;
    for s in classical_zoo()? {
        let params = measure_params(&s)?;
        for k in 1..=2 {
            let r = verify_clone_bound(&s, k, &default_a_grid(params.delta_hat))?;
            for p in &r.points {
                let bound = 1.0 - statistical_rhs(params.eps_hat, params.delta_hat, k, p.a) - 1e-8;
                for f in &p.fidelities {
                    worst = worst.min(f - bound);
                }
            }
        }
    }
    Ok(check(worst >= 0.0, format!("min fidelity slack {worst:.3e}")))
}

fn theorem_four() -> Result<Outcome> {
    let xi = PI / 2.0;
    let plus = PureState::plus(1)?;
    let ui = plus.apply_unitary(&gates::rz_half(xi))?;
    let ux = plus.apply_unitary(&(&gates::x() * &gates::rz_half(xi)))?;
    let gap_bfk = blind::blindness_gap(Backend::Bfk, xi)?;
    let gap_mf = blind::blindness_gap(Backend::Mf, xi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_fid = 1.0_f64;
    for backend in Backend::ALL {
        let ri = blind::run(backend, &identity_program(), 3, &mut rng, xi)?;
        let rx = blind::run(backend, &x_program(), 3, &mut rng, xi)?;
        worst_fid = worst_fid
            .min(ri.unlocked_state.expectation_pure(&ui)?)
            .min(rx.unlocked_state.expectation_pure(&ux)?);
    }
    let orthogonal = ui.fidelity(&ux)?;
    Ok(check(
        (gap_bfk - 0.5).abs() <= 1e-9 && (gap_mf - gap_bfk).abs() <= 1e-9 && worst_fid >= 1.0 - 1e-9,
        format!("gap bfk {gap_bfk:.9}, mf {gap_mf:.9}; min fidelity {worst_fid:.12}; |<UI|UX>|^2 = {orthogonal:.1e}"),
    ))
}

fn mbqc_algebra() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 1.0_f64;
    for _ in 0..100 {
        let n = rng.random_range(2..=4);
        let phi = AngleOctant::new(rng.random_range(0..16));
        let theta = AngleOctant::new(rng.random_range(0..8));
        let rpi = if rng.random() {
            AngleOctant::PI
        } else {
            AngleOctant::ZERO
        };
        let mut thetas: Vec<AngleOctant> = (0..n).map(|_| AngleOctant::new(rng.random_range(0..8))).collect();
        let mut rotated = linear_graph_state(n)?;
        for (j, t) in thetas.iter().enumerate() {
            rotated.apply_1q(&gates::rz_half(-t.radians()), j)?;
        }
        worst = worst.min(rotated_graph(&thetas)?.fidelity(&rotated)?);
        thetas.iter_mut().skip(1).for_each(|t| *t = AngleOctant::ZERO);
        thetas[0] = theta;
        let bob = rotated_graph(&thetas)?;
        let plain = linear_graph_state(n)?;
        for b in [false, true] {
            let lhs = mbqc_step_forced(&bob, (phi + theta + rpi).radians(), b)?;
            let rhs = mbqc_step_forced(&plain, (phi + rpi).radians(), b)?;
            worst = worst.min(lhs.fidelity(&rhs)?);
        }
    }
    let mut honest = 1.0_f64;
    for backend in Backend::ALL {
        for n in [3, 4] {
            for _ in 0..20 {
                let angles: Vec<AngleOctant> = (0..n - 1).map(|_| AngleOctant::new(rng.random_range(0..16))).collect();
                let r = blind::run(backend, &angles, n, &mut rng, 0.0)?;
                honest = honest.min(r.unlocked_state.expectation_pure(&r.intended_output)?);
            }
        }
    }
    let hist = first_delta_histogram(&identity_program(), 3, 100_000, 66)?;
    let (_, p_value) = chi_square_uniform(&hist)?;
    Ok(check(
        worst >= 1.0 - 1e-9 && honest >= 1.0 - 1e-9 && p_value > 1e-4,
        format!("identity fidelity {worst:.12}; honest decode {honest:.12}; δ1 chi-square p = {p_value:.4}"),
    ))
}

fn numeric_core() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut twirl = 0.0_f64;
    let mut contraction = f64::INFINITY;
    let mut teleport = 1.0_f64;
    let mut eig = 0.0_f64;
    for n in 1..=3 {
        for _ in 0..5 {
            let rho = random_density(n, &mut rng);
            let d = 1usize << n;
            let mut acc = ComplexMatrix::zeros(d, d);
            for k in 0..1usize << (2 * n) {
                let x: Vec<bool> = (0..n).map(|j| (k >> j) & 1 == 1).collect();
                let z: Vec<bool> = (0..n).map(|j| (k >> (n + j)) & 1 == 1).collect();
                let p = gates::pauli_string(&x, &z);
                acc = &acc + &(&(&p * rho.matrix()) * &p.adjoint());
            }
            let avg = DensityMatrix::new(acc.scale_re(1.0 / (1usize << (2 * n)) as f64))?;
            twirl = twirl.max(trace_distance(&avg, &DensityMatrix::maximally_mixed(n)?)?);
        }
    }
    for _ in 0..50 {
        let phi = random_channel(2, 1, 4, &mut rng);
        let (a, b) = (random_density(2, &mut rng), random_density(2, &mut rng));
        let gap = trace_distance(&a, &b)? - trace_distance(&phi.apply(&a)?, &phi.apply(&b)?)?;
        contraction = contraction.min(gap + 1e-8);
    }
    for _ in 0..20 {
        let psi = random_pure(1, &mut rng);
        let joint = psi.tensor(&PureState::phi_plus())?.to_density()?;
        for e in Povm::bell().effects() {
            let proj = e.operator.kron(&ComplexMatrix::identity(2));
            let post = &(&proj * joint.matrix()) * &proj;
            let p = post.trace().re;
            let rest = DensityMatrix::new(post.scale_re(1.0 / p))?.partial_trace(&[2])?;
            let fix = gates::pauli_xz(e.label & 2 != 0, e.label & 1 != 0);
            let fixed = DensityMatrix::new(&(&fix * rest.matrix()) * &fix.adjoint())?;
            teleport = teleport.min(fixed.expectation_pure(&psi)?);
        }
    }
    for dim in [2, 4, 8, 16, 32] {
        let m = random_hermitian(dim, &mut rng);
        let rebuilt = hermitian_eig(&m)?.reconstruct();
        eig = eig.max((&rebuilt + &m.scale_re(-1.0)).max_abs());
    }
    Ok(check(
        twirl <= 1e-9 && contraction >= 0.0 && teleport >= 1.0 - 1e-9 && eig <= 1e-9,
        format!(
            "twirl {twirl:.1e}; contraction slack {contraction:.2e}; teleport {teleport:.12}; eig residual {eig:.1e}"
        ),
    ))
}

fn main() {
    let start = Instant::now();
    let criteria: [(&str, Criterion); 7] = [
        ("completeness identity", completeness),
        ("protocol equivalence", protocol_equivalence),
        ("clone bound", clone_bound),
        ("fidelity bound", fidelity_bound),
        ("blindness gap", theorem_four),
        ("graph-state algebra", mbqc_algebra),
        ("numeric core", numeric_core),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run().unwrap_or_else(|e| check(false, format!("error: {e}")));
        let mut passed = outcome.passed;
        let mut detail = outcome.detail;
        if i + 1 == criteria.len() {
            let total = start.elapsed();
            passed &= total < Duration::from_secs(300);
            detail = format!("{detail}; suite wall time {:.1} s", total.as_secs_f64());
        }
        all &= passed;
        println!(
            "criterion {} {name}: {} ({detail}; {:.2} s)",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    if !all {
        std::process::exit(1);
    }
}
