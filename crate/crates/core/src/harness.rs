//! Experiments: many independent runs of one framework on one instance,
//! aggregated into a report, and CSV sweeps over instances and frameworks.
//!
//! Trials are split into fixed-size chunks that run in parallel; each chunk
//! is summed in trial order and the chunk sums are combined in chunk order,
//! so a report depends only on its inputs and never on the thread count.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::blackbox::BlackBox;
use crate::calibration::{
    build_table, AttenuationTable, CalibrationConfig, CalibrationMeta, CalibrationWarning, Framework, DEFAULT_EPSILON,
};
use crate::error::{Error, Result};
use crate::frameworks::{
    attn1_finite, attn2_finite, attn3_finite, check_policy, two_sided_finite, Policy, RunOptions, Simulator,
    DEFAULT_INNER_TRIALS,
};
use crate::instance::{EdgeId, Graph, Instance};
use crate::lp::{solve_benchmark, LpSolution};
use crate::rng::{self, tag};
use crate::stats::{bernoulli_stderr, Moments};

const CHUNK: u64 = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub framework: Framework,
    pub trials: u64,
    pub seed: u64,
    pub two_sided: bool,
    pub epsilon: f64,
    pub inner_trials: u64,
    /// Overrides the Chernoff sample size used for vertex calibration.
    pub calibration_samples: Option<u64>,
    /// Use this table instead of calibrating.
    pub table: Option<AttenuationTable>,
}

impl ExperimentConfig {
    pub fn new(framework: Framework, trials: u64, seed: u64) -> Self {
        Self {
            framework,
            trials,
            seed,
            two_sided: false,
            epsilon: DEFAULT_EPSILON,
            inner_trials: DEFAULT_INNER_TRIALS,
            calibration_samples: None,
            table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeReport {
    pub edge: EdgeId,
    /// Offline vertex id.
    pub u: u32,
    /// Online type id.
    pub v: u32,
    pub f: f64,
    /// Mean number of real probes per run.
    pub probe_freq: f64,
    pub probe_stderr: f64,
    pub match_freq: f64,
    pub match_stderr: f64,
    /// `f_e` times the framework's finite-horizon ratio.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub instance_digest: String,
    pub black_box: String,
    pub framework: Framework,
    pub two_sided: bool,
    pub trials: u64,
    pub seed: u64,
    pub epsilon: f64,
    pub inner_trials: u64,
    pub lp_objective: f64,
    pub expected_weight: f64,
    pub weight_stderr: f64,
    pub ratio: f64,
    pub ratio_stderr: f64,
    /// Finite-horizon guarantee of the framework, before the `epsilon` loss.
    pub ratio_bound: f64,
    /// Mean number of matched offline vertices per run.
    pub matched_count: f64,
    pub matched_stderr: f64,
    pub per_edge: Vec<EdgeReport>,
    pub calibration_meta: Option<CalibrationMeta>,
    pub warnings: Vec<CalibrationWarning>,
    /// Not serialized so that reports stay byte-identical across reruns.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Finite-horizon ratio bound of `framework` on a horizon of `table.n`.
pub fn finite_bound(bb: &dyn BlackBox, table: &AttenuationTable, two_sided: bool) -> f64 {
    let profile = bb.profile();
    match table.framework {
        Framework::Attn1 if two_sided => two_sided_finite(profile.alpha, table.n),
        Framework::Attn1 => attn1_finite(profile.alpha, table.n),
        Framework::Attn2 => attn2_finite(profile.ratio_fn, table.n),
        Framework::Attn3 => attn3_finite(&table.schedule()),
    }
}

#[derive(Debug, Clone)]
struct Tally {
    weight: Moments,
    matched: Moments,
    probes: Vec<Moments>,
    matches: Vec<u64>,
}

impl Tally {
    fn new(edges: usize) -> Self {
        Self { weight: Moments::default(), matched: Moments::default(), probes: vec![Moments::default(); edges], matches: vec![0; edges] }
    }

    fn merge(&mut self, other: &Tally) {
        self.weight.merge(&other.weight);
        self.matched.merge(&other.matched);
        for (a, b) in self.probes.iter_mut().zip(&other.probes) {
            a.merge(b);
        }
        for (a, b) in self.matches.iter_mut().zip(&other.matches) {
            *a += b;
        }
    }
}

fn run_options(config: &ExperimentConfig) -> RunOptions {
    RunOptions {
        epsilon: config.epsilon,
        inner_trials: config.inner_trials,
        seed: rng::derive_seed(config.seed, &[tag::STAR_CACHE]),
    }
}

fn calibration_config(config: &ExperimentConfig) -> CalibrationConfig {
    CalibrationConfig {
        epsilon: config.epsilon,
        seed: rng::derive_seed(config.seed, &[tag::CALIBRATION]),
        samples: config.calibration_samples,
    }
}

fn check_config(config: &ExperimentConfig) -> Result<()> {
    if config.trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    if !(config.epsilon > 0.0 && config.epsilon < 1.0) {
        return Err(Error::param("epsilon", format!("{} not in (0,1)", config.epsilon)));
    }
    if config.inner_trials == 0 {
        return Err(Error::param("inner_trials", "must be at least 1"));
    }
    Ok(())
}

/// The table [`run_experiment`] would build for `config`. Passing it back in
/// `config.table` reproduces the same report.
pub fn calibrate_table(instance: &Instance, bb: &dyn BlackBox, config: &ExperimentConfig) -> Result<AttenuationTable> {
    check_config(config)?;
    let graph = Graph::new(instance)?;
    let lp = solve_benchmark(&graph, !config.two_sided)?;
    let sim = Simulator::new(&graph, &lp, bb, run_options(config));
    build_table(&sim, config.framework, &calibration_config(config))
}

/// Solves the LP, builds or checks the table, runs `config.trials` runs and
/// aggregates them.
pub fn run_experiment(instance: &Instance, bb: &dyn BlackBox, config: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    check_config(config)?;
    let graph = Graph::new(instance)?;
    let lp = solve_benchmark(&graph, !config.two_sided)?;
    let sim = Simulator::new(&graph, &lp, bb, run_options(config));
    let table = match &config.table {
        Some(t) => t.clone(),
        None => build_table(&sim, config.framework, &calibration_config(config))?,
    };
    check_policy(&sim, config.framework, &table, config.two_sided)?;
    let policy = Policy::new(config.framework, &table, config.two_sided);
    let tally = run_trials(&sim, &policy, config.trials, config.seed);
    Ok(report(&graph, &lp, bb, &table, config, &tally, start.elapsed()))
}

fn run_trials(sim: &Simulator<'_>, policy: &Policy<'_>, trials: u64, seed: u64) -> Tally {
    let edges = sim.graph().edge_count();
    let chunks = trials.div_ceil(CHUNK);
    let partials: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut tally = Tally::new(edges);
            for i in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let rec = sim.run_trial(policy, &mut rng::stream(seed, &[tag::TRIAL, i]));
                tally.weight.push(rec.weight);
                tally.matched.push(rec.matches.len() as f64);
                for (m, &p) in tally.probes.iter_mut().zip(&rec.probes) {
                    m.push(f64::from(p));
                }
                for m in &rec.matches {
                    tally.matches[m.edge.0] += 1;
                }
            }
            tally
        })
        .collect();
    let mut total = Tally::new(edges);
    for p in &partials {
        total.merge(p);
    }
    total
}

fn report(
    graph: &Graph,
    lp: &LpSolution,
    bb: &dyn BlackBox,
    table: &AttenuationTable,
    config: &ExperimentConfig,
    tally: &Tally,
    wall_time: Duration,
) -> ExperimentReport {
    let bound = finite_bound(bb, table, config.two_sided);
    let k = config.trials;
    let instance = graph.instance();
    let per_edge = graph
        .edges()
        .map(|(e, edge)| {
            let match_freq = tally.matches[e.0] as f64 / k as f64;
            EdgeReport {
                edge: e,
                u: instance.offline[edge.u].id,
                v: instance.online[edge.v].id,
                f: lp.f(e),
                probe_freq: tally.probes[e.0].mean(),
                probe_stderr: tally.probes[e.0].stderr(),
                match_freq,
                match_stderr: bernoulli_stderr(match_freq, k),
                bound: lp.f(e) * bound,
            }
        })
        .collect();
    let expected_weight = tally.weight.mean();
    let weight_stderr = tally.weight.stderr();
    let (ratio, ratio_stderr) = if lp.objective > 0.0 {
        (expected_weight / lp.objective, weight_stderr / lp.objective)
    } else {
        (0.0, 0.0)
    };
    ExperimentReport {
        instance_digest: instance.digest(),
        black_box: bb.name().to_string(),
        framework: config.framework,
        two_sided: config.two_sided,
        trials: k,
        seed: config.seed,
        epsilon: config.epsilon,
        inner_trials: config.inner_trials,
        lp_objective: lp.objective,
        expected_weight,
        weight_stderr,
        ratio,
        ratio_stderr,
        ratio_bound: bound,
        matched_count: tally.matched.mean(),
        matched_stderr: tally.matched.stderr(),
        per_edge,
        calibration_meta: table.calibration_meta.clone(),
        warnings: table.warnings.clone(),
        wall_time,
    }
}

/// Column order of [`sweep`] output.
pub const SWEEP_HEADER: [&str; 15] = [
    "instance",
    "digest",
    "framework",
    "two_sided",
    "trials",
    "seed",
    "lp_objective",
    "expected_weight",
    "weight_stderr",
    "ratio",
    "ratio_stderr",
    "ratio_bound",
    "matched_count",
    "warnings",
    "error",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub trials: u64,
    pub seed: u64,
    pub two_sided: bool,
    pub epsilon: f64,
    pub inner_trials: u64,
    pub calibration_samples: Option<u64>,
}

impl SweepConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            two_sided: false,
            epsilon: DEFAULT_EPSILON,
            inner_trials: DEFAULT_INNER_TRIALS,
            calibration_samples: None,
        }
    }
}

/// One CSV row per (instance, framework), in input order. A failing cell
/// fills the `error` column and leaves the numbers empty.
pub fn sweep(
    instances: &[(String, Instance)],
    frameworks: &[Framework],
    bb: &dyn BlackBox,
    config: &SweepConfig,
) -> Result<String> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(SWEEP_HEADER)?;
    for (name, instance) in instances {
        for &framework in frameworks {
            let cfg = ExperimentConfig {
                two_sided: config.two_sided,
                epsilon: config.epsilon,
                inner_trials: config.inner_trials,
                calibration_samples: config.calibration_samples,
                ..ExperimentConfig::new(framework, config.trials, config.seed)
            };
            let head = [
                name.clone(),
                instance.digest(),
                framework.to_string(),
                config.two_sided.to_string(),
                config.trials.to_string(),
                config.seed.to_string(),
            ];
            let tail: Vec<String> = match run_experiment(instance, bb, &cfg) {
                Ok(r) => [
                    r.lp_objective,
                    r.expected_weight,
                    r.weight_stderr,
                    r.ratio,
                    r.ratio_stderr,
                    r.ratio_bound,
                    r.matched_count,
                ]
                .iter()
                .map(f64::to_string)
                .chain([r.warnings.len().to_string(), String::new()])
                .collect(),
                Err(e) => {
                    log::warn!("sweep cell {name}/{framework} failed: {e}");
                    let mut cells = vec![String::new(); 8];
                    cells.push(e.to_string());
                    cells
                }
            };
            out.write_record(head.iter().chain(&tail))?;
        }
    }
    let bytes = out.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
