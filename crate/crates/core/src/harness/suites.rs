//! Experiment suites tying the modules together.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, Parameters, Suite};
use super::report::{Assertion, ExperimentReport};
use super::seed::{derive_trial_seed, trial_rng};
use crate::blind::{self, AngleOctant, Backend};
use crate::error::{Error, Result};
use crate::hamiltonian::{ground, instance, HamiltonianSpec, Thresholds};
use crate::nocloning::{self, BOUND_SLACK};
use crate::qcore::state::{trace_distance, DensityMatrix, PureState};
use crate::qre::{self, QreScheme, TwoRoundStrategy};
use crate::verify::{self, AcceptanceResult, Mode, ProverStrategy};

/// Instances used when neither a spec file nor instance names are given.
pub const DEFAULT_TC_INSTANCES: [&str; 5] = ["pair-anti", "pair-singlet", "chain3-anti", "chain3-mixed", "triangle3"];
pub const DEFAULT_QRE_INSTANCES: [&str; 2] = ["pair-anti", "pair-singlet"];
pub const DEFAULT_QRE_SCHEMES: [&str; 2] = ["identity", "depolarized"];
pub const MALICIOUS_STRATEGIES: [&str; 3] = ["fixed", "uniform", "wrong-basis"];
pub const DEFAULT_MC_TRIALS: u64 = 100_000;
pub const DEFAULT_ATTACK_TRIALS: u64 = 64;
pub const DEFAULT_DELTA_SAMPLES: u64 = 100_000;
pub const DEFAULT_DEMO_ANGLES: [i64; 2] = [2, 6];
/// Standard errors allowed between a Monte Carlo estimate and its exact value.
pub const MC_SIGMAS: f64 = 5.0;
const EXACT_TOL: f64 = 1e-8;
const EQUIVALENCE_TOL: f64 = 1e-9;
const STATE_TOL: f64 = 1e-9;
const CONSTANT_TOL: f64 = 1e-7;
const UNIFORMITY_P: f64 = 1e-4;
const TV_LIMIT: f64 = 0.01;

/// Runs the configured suite and times it.
pub fn run_suite(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let mut assertions = Vec::new();
    let results = match config.suite {
        Suite::All => {
            let mut all = serde_json::Map::new();
            for suite in Suite::COMPONENTS {
                let value = run_component(suite, config, &mut assertions)?;
                all.insert(suite.name().to_string(), value);
            }
            Value::Object(all)
        }
        suite => run_component(suite, config, &mut assertions)?,
    };
    let report = ExperimentReport::new(config.clone(), results, assertions, start.elapsed().as_secs_f64());
    if let Some(path) = &config.output_path {
        report.write_json(path)?;
    }
    Ok(report)
}

fn run_component(suite: Suite, config: &ExperimentConfig, out: &mut Vec<Assertion>) -> Result<Value> {
    log::info!("running suite {suite}");
    let p = &config.parameters;
    let seed = config.seed;
    match suite {
        Suite::VerifyTc => verify_tc(p, seed, out),
        Suite::VerifyQre => verify_qre(p, seed, out),
        Suite::Noclone => noclone(p, out),
        Suite::BlindAttack => blind_attack(p, seed, out),
        Suite::BfkDemo => bfk_demo(p, seed, out),
        Suite::All => unreachable!("`all` is expanded by run_suite"),
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

/// Named instances from a spec file or the instance library.
pub fn load_instances(p: &Parameters, defaults: &[&str]) -> Result<Vec<(String, HamiltonianSpec)>> {
    if let Some(path) = &p.spec_path {
        let spec: HamiltonianSpec = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        return Ok(vec![(name, spec)]);
    }
    let names: Vec<String> = match &p.instances {
        Some(list) => list.clone(),
        None => defaults.iter().map(|s| s.to_string()).collect(),
    };
    names.into_iter().map(|n| Ok((n.clone(), instance(&n)?))).collect()
}

/// A built-in scheme by name, or a scheme JSON file.
pub fn resolve_scheme(name_or_path: &str, n: usize) -> Result<QreScheme> {
    let path = Path::new(name_or_path);
    if path.is_file() {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    } else {
        qre::builtin(name_or_path, n)
    }
}

fn mode_of(p: &Parameters, seed: u64) -> Mode {
    match p.mode.as_deref() {
        Some("mc") => Mode::MonteCarlo {
            trials: p.trials.unwrap_or(DEFAULT_MC_TRIALS),
            seed,
        },
        _ => Mode::Exact,
    }
}

fn sigma(r: &AcceptanceResult) -> f64 {
    r.std_error.unwrap_or(0.0)
}

/// The report record for one energy-test evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TcRecord {
    pub instance: String,
    #[serde(rename = "spec-hash")]
    pub spec_hash: String,
    pub strategy: String,
    pub p_acc: f64,
    pub method: verify::Method,
    pub trials: u64,
    pub std_error: Option<f64>,
    pub ground_energy: f64,
}

pub fn verify_tc_record(name: &str, spec: &HamiltonianSpec, strategy: &str, mode: Mode) -> Result<TcRecord> {
    let energy = ground(spec)?.energy;
    let prover = ProverStrategy::from_name(strategy, spec)?;
    let r = verify::acceptance(spec, &prover, mode)?;
    Ok(TcRecord {
        instance: name.to_string(),
        spec_hash: spec.content_hash(),
        strategy: strategy.to_string(),
        p_acc: r.probability,
        method: r.method,
        trials: r.trials,
        std_error: r.std_error,
        ground_energy: energy,
    })
}

fn verify_tc(p: &Parameters, seed: u64, out: &mut Vec<Assertion>) -> Result<Value> {
    let strategy = p.strategy.as_deref().unwrap_or("honest");
    let mode = mode_of(p, seed);
    let mut records = Vec::new();
    for (name, spec) in load_instances(p, &DEFAULT_TC_INSTANCES)? {
        let rec = verify_tc_record(&name, &spec, strategy, mode)?;
        let ideal = 1.0 - rec.ground_energy;
        let honest = matches!(strategy, "honest" | "honest-teleport");
        let exact = match mode {
            Mode::Exact => rec.p_acc,
            Mode::MonteCarlo { .. } => {
                verify::acceptance_exact(&spec, &ProverStrategy::from_name(strategy, &spec)?)?.probability
            }
        };
        if let Mode::MonteCarlo { .. } = mode {
            let s = rec.std_error.unwrap_or(0.0);
            out.push(Assertion::at_most(
                format!("verify-tc/{name}/{strategy}/mc-vs-exact"),
                (rec.p_acc - exact).abs(),
                MC_SIGMAS * s,
                1e-12,
            ));
        }
        if honest {
            out.push(Assertion::within(
                format!("verify-tc/{name}/completeness"),
                exact,
                ideal,
                EXACT_TOL,
            ));
        } else {
            out.push(Assertion::at_most(
                format!("verify-tc/{name}/{strategy}/below-honest"),
                exact,
                ideal,
                EXACT_TOL,
            ));
        }
        records.push(rec);
    }
    to_value(&records)
}

fn verify_qre(p: &Parameters, seed: u64, out: &mut Vec<Assertion>) -> Result<Value> {
    let mode = mode_of(p, seed);
    let instances = load_instances(p, &DEFAULT_QRE_INSTANCES)?;
    let scheme_names: Vec<String> = match &p.scheme {
        Some(s) => vec![s.clone()],
        None => DEFAULT_QRE_SCHEMES.iter().map(|s| s.to_string()).collect(),
    };
    let thresholds = qre_thresholds(&instances)?;
    let mut schemes = Vec::new();
    for scheme_name in &scheme_names {
        let mut rows = Vec::new();
        let mut scheme_params = None;
        let mut label = scheme_name.clone();
        for (inst, spec) in &instances {
            let s = resolve_scheme(scheme_name, spec.n())?;
            label = s.name().to_string();
            let params = qre::measure_params(&s)?;
            scheme_params = Some(params);
            let e0 = ground(spec)?.state;
            let p2 = verify::acceptance(spec, &ProverStrategy::HonestTeleport(e0.clone()), mode)?;
            let p3 = qre::protocol_two_run(&s, spec, &TwoRoundStrategy::Honest(e0), mode)?;
            let noise = MC_SIGMAS * (sigma(&p2) + sigma(&p3));
            let diff = (p3.probability - p2.probability).abs();
            let tag = format!("verify-qre/{label}/{inst}");
            out.push(Assertion::at_most(
                format!("{tag}/honest-degradation"),
                diff,
                2.0 * params.delta_hat,
                EXACT_TOL + noise,
            ));
            if params.delta_hat == 0.0 && params.eps_hat == 0.0 {
                out.push(Assertion::at_most(
                    format!("{tag}/equivalence"),
                    diff,
                    0.0,
                    EQUIVALENCE_TOL + noise,
                ));
            }
            let mut malicious = Vec::new();
            for strat_name in MALICIOUS_STRATEGIES {
                let strat = ProverStrategy::from_name(strat_name, spec)?;
                let simulated = qre::simulated_prover_run(&s, spec, &strat, mode)?;
                let direct = qre::protocol_two_run(&s, spec, &TwoRoundStrategy::Direct(strat), mode)?;
                let noise = MC_SIGMAS * (sigma(&simulated) + sigma(&direct));
                out.push(Assertion::at_most(
                    format!("{tag}/{strat_name}/simulated-vs-direct"),
                    (simulated.probability - direct.probability).abs(),
                    2.0 * params.eps_hat,
                    EXACT_TOL + noise,
                ));
                malicious.push(json!({
                    "strategy": strat_name,
                    "simulated": simulated,
                    "direct": direct,
                }));
            }
            rows.push(json!({
                "instance": inst,
                "spec-hash": spec.content_hash(),
                "original": p2,
                "two-round": p3,
                "malicious": malicious,
            }));
        }
        let gap = match (&scheme_params, &thresholds) {
            (Some(params), Some(t)) => Some(qre::completeness_soundness_gap(params, t)),
            _ => None,
        };
        schemes.push(json!({
            "scheme": label,
            "params": scheme_params,
            "thresholds": thresholds,
            "gap": gap,
            "instances": rows,
        }));
    }
    Ok(Value::Array(schemes))
}

/// `(α, β)` from the lowest- and highest-energy instances, when they differ.
fn qre_thresholds(instances: &[(String, HamiltonianSpec)]) -> Result<Option<Thresholds>> {
    let mut energies = Vec::new();
    for (_, spec) in instances {
        energies.push((ground(spec)?.energy, spec));
    }
    energies.sort_by(|a, b| a.0.total_cmp(&b.0));
    match (energies.first(), energies.last()) {
        (Some(lo), Some(hi)) if hi.0 > lo.0 + EXACT_TOL => Ok(Some(Thresholds::from_pair(lo.1, hi.1)?)),
        _ => Ok(None),
    }
}

fn noclone(p: &Parameters, out: &mut Vec<Assertion>) -> Result<Value> {
    let schemes: Vec<QreScheme> = match &p.scheme {
        Some(s) => vec![resolve_scheme(s, p.n.unwrap_or(1))?],
        None => qre::classical_zoo()?,
    };
    let ks = p.k.clone().unwrap_or_else(|| vec![1, 2, 3]);

    let zero = PureState::zero(1)?;
    let plus = PureState::plus(1)?;
    let pair = trace_distance(&plus.tensor(&plus)?.to_density()?, &zero.tensor(&zero)?.to_density()?)?;
    let single = trace_distance(&plus.to_density()?, &zero.to_density()?)?;
    out.push(Assertion::within(
        "noclone/constant/pair-distance",
        pair,
        0.866_025_4,
        CONSTANT_TOL,
    ));
    out.push(Assertion::within(
        "noclone/constant/single-distance",
        single,
        0.707_106_8,
        CONSTANT_TOL,
    ));

    let mut reports = Vec::new();
    for s in &schemes {
        let name = s.name().to_string();
        let params = qre::measure_params(s)?;
        let grid = p
            .a_grid
            .clone()
            .unwrap_or_else(|| nocloning::default_a_grid(params.delta_hat));
        let mut per_k = Vec::new();
        for &k in &ks {
            let bound = nocloning::verify_clone_bound(s, k, &grid)?;
            let eps_comp = nocloning::computational_eps(s, k)?;
            for point in &bound.points {
                let tag = format!("noclone/{name}/k={k}/a={}", point.a);
                let worst_lhs = point.lhs.iter().copied().fold(0.0, f64::max);
                let worst_fid = point.fidelities.iter().copied().fold(1.0, f64::min);
                out.push(Assertion::at_most(
                    format!("{tag}/trace-distance"),
                    worst_lhs,
                    point.rhs_statistical,
                    BOUND_SLACK,
                ));
                out.push(Assertion::at_least(
                    format!("{tag}/fidelity"),
                    worst_fid,
                    1.0 - point.rhs_statistical,
                    BOUND_SLACK,
                ));
                out.push(Assertion::at_least(
                    format!("{tag}/fidelity-finite-tests"),
                    worst_fid,
                    1.0 - nocloning::statistical_rhs(eps_comp, params.delta_hat, k, point.a),
                    BOUND_SLACK,
                ));
            }
            per_k.push(json!({
                "k": k,
                "eps-computational": eps_comp,
                "worst-margin": bound.worst_margin,
                "points": bound.points,
            }));
        }
        let gap_masses = if params.classical {
            let mut rows = Vec::new();
            for &a in &grid {
                let masses = (0..s.family().len())
                    .map(|i| nocloning::gap_set_mass(s, i, a))
                    .collect::<Result<Vec<_>>>()?;
                let worst = masses.iter().map(|m| m.mass).fold(0.0, f64::max);
                let bound = params.delta_hat / a;
                out.push(Assertion::at_most(
                    format!("noclone/{name}/a={a}/gap-set-mass"),
                    worst,
                    bound,
                    BOUND_SLACK,
                ));
                rows.push(json!({"a": a, "bound": bound, "masses": masses.iter().map(|m| m.mass).collect::<Vec<_>>()}));
            }
            Value::Array(rows)
        } else {
            Value::String("encoding is not classical".into())
        };
        let chain = match nocloning::chain_inequality_report(s) {
            Ok(r) => {
                out.push(Assertion::at_most(
                    format!("noclone/{name}/chain"),
                    r.pair_distance - r.single_distance,
                    r.rhs,
                    BOUND_SLACK,
                ));
                to_value(&r)?
            }
            Err(Error::MissingStates(msg)) => json!({ "skipped": msg }),
            Err(e) => return Err(e),
        };
        reports.push(json!({
            "scheme": name,
            "params": params,
            "a-grid": grid,
            "copies": per_k,
            "gap-set-mass": gap_masses,
            "chain": chain,
        }));
    }
    Ok(json!({
        "pair-distance": pair,
        "single-distance": single,
        "schemes": reports,
    }))
}

fn backends(p: &Parameters) -> Result<Vec<Backend>> {
    match &p.backend {
        Some(b) => Ok(vec![b.parse()?]),
        None => Ok(Backend::ALL.to_vec()),
    }
}

fn blind_attack(p: &Parameters, seed: u64, out: &mut Vec<Assertion>) -> Result<Value> {
    let xi = p.xi.unwrap_or(PI / 2.0);
    let trials = p.trials.unwrap_or(DEFAULT_ATTACK_TRIALS);
    let expected_gap = xi.sin().abs() / 2.0;
    let mut per_backend = Vec::new();
    let mut gaps = Vec::new();
    for backend in backends(p)? {
        let runs = (0..trials)
            .into_par_iter()
            .map(|i| blind::blindness_gap_with(backend, xi, &mut trial_rng(seed, i)))
            .collect::<Result<Vec<_>>>()?;
        let min_fid = runs
            .iter()
            .map(|r| r.fidelity_identity.min(r.fidelity_x))
            .fold(1.0, f64::min);
        let worst_gap = runs
            .iter()
            .map(|r| r.gap)
            .max_by(|a, b| (a - expected_gap).abs().total_cmp(&(b - expected_gap).abs()))
            .unwrap_or(f64::NAN);
        out.push(Assertion::at_least(
            format!("blind-attack/{backend}/deviated-fidelity"),
            min_fid,
            1.0 - STATE_TOL,
            0.0,
        ));
        out.push(Assertion::within(
            format!("blind-attack/{backend}/gap"),
            worst_gap,
            expected_gap,
            STATE_TOL,
        ));
        gaps.push(runs[0].gap);
        per_backend.push(json!({
            "backend": backend,
            "trials": trials,
            "gap": runs[0].gap,
            "min-fidelity": min_fid,
            "out-identity": runs[0].out_identity,
            "out-x": runs[0].out_x,
        }));
    }
    if gaps.len() == 2 {
        out.push(Assertion::at_most(
            "blind-attack/backends-agree",
            (gaps[0] - gaps[1]).abs(),
            STATE_TOL,
            0.0,
        ));
    }

    let mut extra = serde_json::Map::new();
    if backends(p)?.contains(&Backend::Bfk) {
        let samples = p.samples.unwrap_or(DEFAULT_DELTA_SAMPLES);
        let program_a = blind::identity_program();
        let program_b = vec![AngleOctant::new(5), AngleOctant::new(3)];
        let hist_a = blind::first_delta_histogram(&program_a, 3, samples, derive_trial_seed(seed, u64::MAX))?;
        let hist_b = blind::first_delta_histogram(&program_b, 3, samples, derive_trial_seed(seed, u64::MAX - 1))?;
        let (stat, p_value) = blind::chi_square_uniform(&hist_a)?;
        let tv = blind::total_variation(&hist_a, &hist_b)?;
        out.push(Assertion::at_least(
            "blind-attack/delta-uniformity-p",
            p_value,
            UNIFORMITY_P,
            0.0,
        ));
        out.push(Assertion::at_most("blind-attack/delta-program-tv", tv, TV_LIMIT, 0.0));
        extra.insert(
            "delta-marginal".into(),
            json!({"samples": samples, "histogram": hist_a, "other-histogram": hist_b, "chi-square": stat, "p-value": p_value, "tv": tv}),
        );
        let mixed = DensityMatrix::maximally_mixed(1)?;
        let mut avg_rows = Vec::new();
        for (label, program) in [("identity", blind::identity_program()), ("x", blind::x_program())] {
            let avg = blind::bfk_average_server_state(&program, 3)?;
            let d = trace_distance(&avg, &mixed)?;
            out.push(Assertion::at_most(
                format!("blind-attack/bfk/{label}/key-average-mixed"),
                d,
                STATE_TOL,
                0.0,
            ));
            avg_rows.push(json!({"program": label, "distance-to-mixed": d}));
        }
        extra.insert("key-averaged".into(), Value::Array(avg_rows));
    }
    Ok(json!({
        "xi": xi,
        "expected-gap": expected_gap,
        "backends": per_backend,
        "bfk-checks": Value::Object(extra),
    }))
}

/// Wire angles from the parameters, or the demo default.
pub fn demo_angles(p: &Parameters) -> Vec<AngleOctant> {
    p.angles
        .as_deref()
        .unwrap_or(&DEFAULT_DEMO_ANGLES)
        .iter()
        .map(|&k| AngleOctant::new(k))
        .collect()
}

fn bfk_demo(p: &Parameters, seed: u64, out: &mut Vec<Assertion>) -> Result<Value> {
    let angles = demo_angles(p);
    let n = p.n.unwrap_or(angles.len() + 1);
    let xi = p.xi.unwrap_or(0.0);
    let mut runs = Vec::new();
    for (i, backend) in Backend::ALL.into_iter().enumerate() {
        let r = blind::run(backend, &angles, n, &mut trial_rng(seed, i as u64), xi)?;
        out.push(Assertion::at_least(
            format!("bfk-demo/{backend}/fidelity"),
            r.fidelity_to_deviated_target,
            1.0 - STATE_TOL,
            0.0,
        ));
        runs.push(r);
    }
    to_value(&runs)
}
