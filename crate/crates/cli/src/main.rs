use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use stomatch::blackbox::estimate_probe_probs;
use stomatch::calibration::DEFAULT_EPSILON;
use stomatch::frameworks::DEFAULT_INNER_TRIALS;
use stomatch::harness::{calibrate_table, run_experiment, sweep, SweepConfig};
use stomatch::instance::{gap_instance, random_instance, RandomSpec, RateMode};
use stomatch::lp::solve_benchmark;
use stomatch::oracle::{exact_star_probe_probs, optimal_online_dp};
use stomatch::{rng, AttenuationTable, Error, ExperimentConfig, Framework, Graph, Instance, StarProblem, UniformRandom};

const EXIT_VALIDATION: u8 = 2;
const EXIT_WARNINGS: u8 = 3;

#[derive(Parser)]
#[command(name = "stomatch", version, about = "Online stochastic matching with timeouts: LP, frameworks and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Benchmark LP.
    #[command(subcommand)]
    Lp(LpCommand),
    /// Probing black box on a single star.
    #[command(subcommand)]
    Blackbox(BlackboxCommand),
    /// Build an attenuation table.
    Calibrate(CalibrateArgs),
    /// Run one framework many times and report.
    Run(RunArgs),
    /// Exact baselines for tiny inputs.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// One CSV row per (instance, framework).
    Sweep(SweepArgs),
    /// Write an instance file.
    #[command(subcommand)]
    Generate(GenerateCommand),
}

#[derive(Subcommand)]
enum LpCommand {
    /// Solve the LP and print the objective and f.
    Solve {
        instance: PathBuf,
        /// Use the offline timeouts t_u (two-sided model).
        #[arg(long)]
        two_sided: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BlackboxCommand {
    /// Estimate per-edge probe probabilities of BB_UR.
    ProbeProbs {
        star: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Optimal online policy value by dynamic programming.
    Dp {
        instance: PathBuf,
        #[arg(long)]
        two_sided: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact BB_UR probe probabilities on a star of at most 5 edges.
    Star {
        star: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenerateCommand {
    /// Complete n x n instance with p = 1/n.
    Gap {
        n: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random instance with integral rates.
    Random {
        #[arg(long)]
        offline: u32,
        #[arg(long)]
        online: u32,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        /// Use fractional rates summing to this horizon.
        #[arg(long)]
        horizon: Option<u32>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Walks per star for edge attenuation estimates.
    #[arg(long, default_value_t = DEFAULT_INNER_TRIALS)]
    inner_trials: u64,
    /// Samples per vertex calibration estimate (default: Chernoff size).
    #[arg(long)]
    samples: Option<u64>,
    /// Exit with code 3 if calibration logged warnings.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct CalibrateArgs {
    instance: PathBuf,
    #[arg(long)]
    framework: Framework,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    two_sided: bool,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    instance: PathBuf,
    #[arg(long)]
    framework: Framework,
    #[arg(long)]
    two_sided: bool,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    /// Table from `calibrate`; calibrates in place when absent.
    #[arg(long)]
    table: Option<PathBuf>,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    /// Comma separated; empty gives a header-only CSV.
    #[arg(long, value_delimiter = ',', default_value = "attn1,attn2,attn3")]
    frameworks: Vec<String>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    two_sided: bool,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let validation = err.chain().any(|cause| {
                matches!(
                    cause.downcast_ref::<Error>(),
                    Some(
                        Error::InvalidInstance(_)
                            | Error::InvalidParameter { .. }
                            | Error::InfeasibleStar(_)
                            | Error::TableMismatch(_)
                            | Error::Json(_)
                            | Error::StateSpaceTooLarge { .. }
                            | Error::StarTooLarge { .. }
                    )
                )
            });
            if validation {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn execute(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Lp(LpCommand::Solve { instance, two_sided, out }) => {
            let graph = Graph::new(&load_instance(&instance)?)?;
            let lp = solve_benchmark(&graph, !two_sided)?;
            emit(&lp, out.as_deref())?;
        }
        Command::Blackbox(BlackboxCommand::ProbeProbs { star, trials, seed, out }) => {
            if trials == 0 {
                return Err(Error::InvalidParameter { name: "trials", reason: "must be at least 1".into() }.into());
            }
            let star = load_star(&star)?;
            star.check_feasible()?;
            let est = estimate_probe_probs(&UniformRandom, &star, trials, &mut rng::from_seed(seed));
            emit(&est, out.as_deref())?;
        }
        Command::Calibrate(args) => {
            let instance = load_instance(&args.instance)?;
            let mut config = ExperimentConfig::new(args.framework, 1, args.seed);
            config.two_sided = args.two_sided;
            apply_sim(&mut config, &args.sim);
            let table = calibrate_table(&instance, &UniformRandom, &config)?;
            for w in &table.warnings {
                log::warn!("{w}");
            }
            emit(&table, args.out.as_deref())?;
            return Ok(strict_exit(args.sim.strict, table.warnings.len()));
        }
        Command::Run(args) => {
            let instance = load_instance(&args.instance)?;
            let mut config = ExperimentConfig::new(args.framework, args.trials, args.seed);
            config.two_sided = args.two_sided;
            apply_sim(&mut config, &args.sim);
            if let Some(path) = &args.table {
                let table = AttenuationTable::load(path).with_context(|| format!("reading table {}", path.display()))?;
                config.table = Some(table);
            }
            let report = run_experiment(&instance, &UniformRandom, &config)?;
            log::info!("{} trials in {:.2?}", report.trials, report.wall_time);
            eprintln!(
                "{} ratio {:.5} +- {:.5} (bound {:.5}), weight {:.5} / lp {:.5}",
                report.framework,
                report.ratio,
                report.ratio_stderr,
                report.ratio_bound,
                report.expected_weight,
                report.lp_objective
            );
            emit(&report, args.out.as_deref())?;
            return Ok(strict_exit(args.sim.strict, report.warnings.len()));
        }
        Command::Oracle(OracleCommand::Dp { instance, two_sided, out }) => {
            let graph = Graph::new(&load_instance(&instance)?)?;
            emit(&optimal_online_dp(&graph, two_sided)?, out.as_deref())?;
        }
        Command::Oracle(OracleCommand::Star { star, out }) => {
            let star = load_star(&star)?;
            let probs = exact_star_probe_probs(&star)?;
            let rows: Vec<_> = star
                .edges
                .iter()
                .zip(probs)
                .map(|(s, p)| serde_json::json!({ "edge": s.edge, "prob": p }))
                .collect();
            emit(&rows, out.as_deref())?;
        }
        Command::Sweep(args) => {
            let frameworks = args
                .frameworks
                .iter()
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<Framework>())
                .collect::<Result<Vec<_>, _>>()?;
            let instances = args
                .instances
                .iter()
                .map(|p| Ok((p.display().to_string(), load_instance(p)?)))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let config = SweepConfig {
                two_sided: args.two_sided,
                epsilon: args.sim.epsilon,
                inner_trials: args.sim.inner_trials,
                calibration_samples: args.sim.samples,
                ..SweepConfig::new(args.trials, args.seed)
            };
            let csv = sweep(&instances, &frameworks, &UniformRandom, &config)?;
            write_text(&csv, args.out.as_deref())?;
        }
        Command::Generate(GenerateCommand::Gap { n, out }) => {
            if n == 0 {
                return Err(Error::InvalidParameter { name: "n", reason: "must be at least 1".into() }.into());
            }
            write_text(&gap_instance(n).to_json()?, out.as_deref())?;
        }
        Command::Generate(GenerateCommand::Random { offline, online, density, horizon, seed, out }) => {
            let rates = horizon.map_or(RateMode::Integral, |h| RateMode::Fractional { horizon: h });
            let instance = random_instance(seed, &RandomSpec::new(offline, online, density, rates))?;
            write_text(&instance.to_json()?, out.as_deref())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn apply_sim(config: &mut ExperimentConfig, sim: &SimArgs) {
    config.epsilon = sim.epsilon;
    config.inner_trials = sim.inner_trials;
    config.calibration_samples = sim.samples;
}

fn strict_exit(strict: bool, warnings: usize) -> ExitCode {
    if strict && warnings > 0 {
        eprintln!("{warnings} calibration warning(s); failing because of --strict");
        ExitCode::from(EXIT_WARNINGS)
    } else {
        ExitCode::SUCCESS
    }
}

fn load_instance(path: &Path) -> anyhow::Result<Instance> {
    Instance::load(path).with_context(|| format!("reading instance {}", path.display()))
}

fn load_star(path: &Path) -> anyhow::Result<StarProblem> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading star {}", path.display()))?;
    Ok(StarProblem::from_json(&text)?)
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(&text, out)
}

fn write_text(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
