use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qrev_core::blind::BlindRunResult;
use qrev_core::harness::{run_suite, ExperimentConfig, ExperimentReport, Parameters, Suite};

/// Thread count override for the rayon pool.
const THREADS_ENV: &str = "QREV_THREADS";

#[derive(Parser)]
#[command(
    name = "qrev",
    version,
    about = "Verification, randomized-encoding and blind-computation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Mc,
}

impl ModeArg {
    fn name(self) -> &'static str {
        match self {
            ModeArg::Exact => "exact",
            ModeArg::Mc => "mc",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Bfk,
    Mf,
}

impl BackendArg {
    fn name(self) -> &'static str {
        match self {
            BackendArg::Bfk => "bfk",
            BackendArg::Mf => "mf",
        }
    }
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the JSON output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Acceptance probability of the energy test for one prover strategy.
    VerifyTc {
        /// Hamiltonian spec JSON; defaults to the built-in instances.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Built-in instance names, used without --spec.
        #[arg(long, value_delimiter = ',')]
        instance: Vec<String>,
        #[arg(long, default_value = "honest")]
        strategy: String,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        #[arg(long)]
        trials: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Compile a randomized encoding into the two-round protocol and check the degradation bounds.
    VerifyQre {
        /// Built-in scheme name or scheme JSON file.
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        instance: Vec<String>,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        #[arg(long)]
        trials: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Build the cloner from a scheme and check the copy bounds.
    Noclone {
        /// Built-in scheme name or scheme JSON file; defaults to the classical zoo.
        #[arg(long)]
        scheme: Option<String>,
        /// Copy counts.
        #[arg(long, value_delimiter = ',')]
        k: Vec<usize>,
        /// Qubit count for built-in schemes that take one.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        a_grid: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the deviation attack and measure the blindness gap.
    BlindAttack {
        /// Defaults to both backends.
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        /// Attack angle in radians.
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<f64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Samples for the announced-angle histogram.
        #[arg(long)]
        samples: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run one blind computation and print its transcript.
    BfkDemo {
        /// Wire angles as multiples of π/8.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        angles: Vec<i64>,
        /// Chain length; defaults to one more than the number of angles.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a suite from flags or a config file and write the full report.
    Run {
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Experiment config JSON; flags override its suite, seed and output path.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn config(suite: Suite, seed: u64, parameters: Parameters) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::new(suite, seed);
    c.parameters = parameters;
    c.validate()?;
    Ok(c)
}

fn non_empty<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn summarize(report: &ExperimentReport) {
    let total = report.assertions.len();
    let failed: Vec<_> = report.failures().collect();
    for a in &failed {
        eprintln!(
            "FAIL {}: measured {} bound {} margin {}",
            a.name, a.measured, a.bound, a.margin
        );
    }
    println!(
        "{}: {}/{} assertions passed in {:.2} s",
        report.suite,
        total - failed.len(),
        total,
        report.wall_time_secs
    );
}

/// Runs a subcommand suite, writing only the payload to `out`.
fn run_payload(config: ExperimentConfig, out: Option<&Path>, unwrap_single: bool) -> Result<ExperimentReport> {
    let report = run_suite(&config)?;
    if let Some(path) = out {
        let payload = match &report.results {
            serde_json::Value::Array(items) if unwrap_single && items.len() == 1 => items[0].clone(),
            other => other.clone(),
        };
        write_json(path, &payload)?;
    }
    summarize(&report);
    Ok(report)
}

fn print_transcript(report: &ExperimentReport) -> Result<()> {
    let runs: Vec<BlindRunResult> = serde_json::from_value(report.results.clone())?;
    for run in runs {
        println!("backend {} (xi = {})", run.backend, run.xi);
        println!("  qubit  target  theta  r  delta  outcome  s");
        for (j, step) in run.steps.iter().enumerate() {
            let theta = step.theta.map_or("-".to_string(), |t| t.to_string());
            let r = step.r.map_or("-".to_string(), |r| u8::from(r).to_string());
            println!(
                "  {j:>5}  {:>6}  {theta:>5}  {r}  {:>5}  {:>7}  {}",
                step.target.to_string(),
                step.delta.to_string(),
                u8::from(step.outcome),
                u8::from(step.s)
            );
        }
        if let Some(t) = run.output_theta {
            println!("  output theta {t}");
        }
        let bits = |v: &[bool]| v.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
        println!("  key x={} z={}", bits(run.key.x()), bits(run.key.z()));
        println!("  final fidelity {:.12}", run.fidelity_to_deviated_target);
    }
    Ok(())
}

fn execute(command: Command) -> Result<bool> {
    let report = match command {
        Command::VerifyTc {
            spec,
            instance,
            strategy,
            mode,
            trials,
            common,
        } => {
            let params = Parameters {
                spec_path: spec,
                instances: non_empty(instance),
                strategy: Some(strategy),
                mode: Some(mode.name().into()),
                trials,
                ..Parameters::default()
            };
            run_payload(
                config(Suite::VerifyTc, common.seed, params)?,
                common.out.as_deref(),
                true,
            )?
        }
        Command::VerifyQre {
            scheme,
            spec,
            instance,
            mode,
            trials,
            common,
        } => {
            let params = Parameters {
                scheme,
                spec_path: spec,
                instances: non_empty(instance),
                mode: Some(mode.name().into()),
                trials,
                ..Parameters::default()
            };
            run_payload(
                config(Suite::VerifyQre, common.seed, params)?,
                common.out.as_deref(),
                true,
            )?
        }
        Command::Noclone {
            scheme,
            k,
            n,
            a_grid,
            common,
        } => {
            let params = Parameters {
                scheme,
                k: non_empty(k),
                n,
                a_grid: non_empty(a_grid),
                ..Parameters::default()
            };
            run_payload(
                config(Suite::Noclone, common.seed, params)?,
                common.out.as_deref(),
                false,
            )?
        }
        Command::BlindAttack {
            backend,
            xi,
            trials,
            samples,
            common,
        } => {
            let params = Parameters {
                backend: backend.map(|b| b.name().into()),
                xi,
                trials,
                samples,
                ..Parameters::default()
            };
            run_payload(
                config(Suite::BlindAttack, common.seed, params)?,
                common.out.as_deref(),
                false,
            )?
        }
        Command::BfkDemo { angles, n, xi, common } => {
            let params = Parameters {
                angles: non_empty(angles),
                n,
                xi,
                ..Parameters::default()
            };
            let report = run_payload(
                config(Suite::BfkDemo, common.seed, params)?,
                common.out.as_deref(),
                false,
            )?;
            print_transcript(&report)?;
            report
        }
        Command::Run {
            suite,
            seed,
            out,
            config: path,
        } => {
            let mut c = match (&path, &suite) {
                (Some(p), _) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
                (None, Some(name)) => ExperimentConfig::new(name.parse()?, seed.unwrap_or(0)),
                (None, None) => bail!("either --suite or --config is required"),
            };
            if let Some(name) = &suite {
                c.suite = name.parse()?;
            }
            if let Some(s) = seed {
                c.seed = s;
            }
            if out.is_some() {
                c.output_path = out;
            }
            let report = run_suite(&c)?;
            summarize(&report);
            report
        }
    };
    Ok(report.passed)
}

fn init_threads() -> Result<()> {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let threads: usize = value
            .parse()
            .with_context(|| format!("{THREADS_ENV} must be a thread count, got `{value}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = init_threads().and_then(|()| execute(cli.command));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
