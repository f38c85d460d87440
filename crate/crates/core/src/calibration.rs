//! Target schedules and simulation-based attenuation factors.
//!
//! Vertex attenuation is calibrated round by round. For round `t` the
//! simulator plays rounds `1..t` many times with the factors already frozen
//! for earlier rounds, estimates `beta_{u,t}`, the probability that `u` is
//! still safe at the start of round `t`, and freezes
//! `sigma_{u,t} = min(1, gamma_t / beta_{u,t})`. During a run each safe `u` is
//! then kept with probability `sigma_{u,t}` independently of the others.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blackbox::{BlackBox, BlackBoxProfile};
use crate::error::{Error, Result};
use crate::frameworks::{Policy, RunState, Simulator};
use crate::instance::{Graph, StarProblem};
use crate::rng::{self, tag, SimRng};
use crate::stats::bernoulli_stderr;

/// Default simulation tolerance.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// Lower bound on every `gamma_t` of the combined schedule.
pub const GAMMA_FLOOR: f64 = 1.0 / std::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Framework {
    /// Edge attenuation to a constant `alpha`.
    Attn1,
    /// Vertex attenuation only.
    Attn2,
    /// Edge and vertex attenuation along the recurrence schedule.
    Attn3,
}

impl Framework {
    pub const ALL: [Framework; 3] = [Framework::Attn1, Framework::Attn2, Framework::Attn3];

    pub fn name(self) -> &'static str {
        match self {
            Framework::Attn1 => "attn1",
            Framework::Attn2 => "attn2",
            Framework::Attn3 => "attn3",
        }
    }

    pub fn attenuates_edges(self) -> bool {
        matches!(self, Framework::Attn1 | Framework::Attn3)
    }

    pub fn attenuates_vertices(self) -> bool {
        matches!(self, Framework::Attn2 | Framework::Attn3)
    }
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Framework {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "attn1" => Ok(Framework::Attn1),
            "attn2" => Ok(Framework::Attn2),
            "attn3" => Ok(Framework::Attn3),
            other => Err(Error::param("framework", format!("unknown framework `{other}`"))),
        }
    }
}

/// Per-round targets, index `t - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Probability that each offline vertex is safe at the start of round t.
    pub gamma: Vec<f64>,
    /// Probe ratio every safe edge is held to in round t.
    pub alpha: Vec<f64>,
}

/// Targets per framework.
///
/// - `Attn1`: `alpha_t = alpha`, `gamma_t = (1 - alpha/n)^{t-1}` (the safe
///   probability of a vertex with a tight LP load).
/// - `Attn2`: `gamma_t = (1 - 1/n)^{t-1}`, `alpha_t = R(gamma_t)`.
/// - `Attn3`: `gamma_1 = 1`, `alpha_t = R(gamma_t)`,
///   `gamma_{t+1} = gamma_t (1 - alpha_t / n)`.
pub fn target_schedule(profile: &BlackBoxProfile, n: u32, framework: Framework) -> Schedule {
    assert!(n >= 1, "horizon must be positive");
    let nf = f64::from(n);
    let mut gamma = Vec::with_capacity(n as usize);
    let mut alpha = Vec::with_capacity(n as usize);
    match framework {
        Framework::Attn1 => {
            for k in 0..n {
                gamma.push((1.0 - profile.alpha / nf).powi(k as i32));
                alpha.push(profile.alpha);
            }
        }
        Framework::Attn2 => {
            for k in 0..n {
                let g = (1.0 - 1.0 / nf).powi(k as i32);
                gamma.push(g);
                alpha.push(profile.ratio(g));
            }
        }
        Framework::Attn3 => {
            let mut g = 1.0;
            for _ in 0..n {
                let a = profile.ratio(g);
                gamma.push(g);
                alpha.push(a);
                g *= 1.0 - a / nf;
            }
        }
    }
    Schedule { gamma, alpha }
}

/// Chernoff sample size `ceil(6 / (eps^2 beta) * ln(2 / delta))`.
pub fn sample_size(epsilon: f64, delta: f64, beta: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param("epsilon", format!("{epsilon} not in (0,1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("{delta} not in (0,1)")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::param("beta", format!("{beta} not in (0,1]")));
    }
    Ok((6.0 / (epsilon * epsilon * beta) * (2.0 / delta).ln()).ceil() as u64)
}

/// Failure probability per estimate used by default, `eps / (2n)`.
pub fn default_delta(epsilon: f64, n: u32) -> f64 {
    epsilon / (2.0 * f64::from(n))
}

/// Samples per estimate used by default: `delta = eps/(2n)`, `beta = 1/e`.
pub fn default_samples(epsilon: f64, n: u32) -> Result<u64> {
    sample_size(epsilon, default_delta(epsilon, n), GAMMA_FLOOR)
}

/// Factors `sigma_{u,t}` for one round, aligned with the offline vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSigma {
    pub round: u32,
    pub factors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMeta {
    /// Simulations per estimate.
    pub samples: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    /// Inner walks per star for edge factors.
    pub inner_trials: u64,
}

/// An estimate that fell below its analytic lower bound by more than `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationWarning {
    pub round: u32,
    /// Offline vertex id.
    pub offline: u32,
    pub estimate: f64,
    pub target: f64,
}

impl fmt::Display for CalibrationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "round {} offline {}: safe estimate {:.5} below target {:.5}",
            self.round, self.offline, self.estimate, self.target
        )
    }
}

/// Frozen attenuation data for one (instance, framework) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttenuationTable {
    pub framework: Framework,
    pub n: u32,
    pub offline_count: usize,
    pub instance_digest: String,
    /// One entry per round `2..=n` for vertex-attenuating frameworks.
    pub vertex_sigma: Vec<RoundSigma>,
    pub gamma_target: Vec<f64>,
    pub alpha_target: Vec<f64>,
    pub calibration_meta: Option<CalibrationMeta>,
    #[serde(default)]
    pub warnings: Vec<CalibrationWarning>,
}

impl AttenuationTable {
    /// Table with the targets only and no vertex factors yet.
    pub fn uncalibrated(graph: &Graph, profile: &BlackBoxProfile, framework: Framework) -> Self {
        let schedule = target_schedule(profile, graph.instance().n, framework);
        Self {
            framework,
            n: graph.instance().n,
            offline_count: graph.offline_count(),
            instance_digest: graph.instance().digest(),
            vertex_sigma: Vec::new(),
            gamma_target: schedule.gamma,
            alpha_target: schedule.alpha,
            calibration_meta: None,
            warnings: Vec::new(),
        }
    }

    /// `sigma_{u,t}`; 1 when round `t` has no factors.
    pub fn sigma(&self, round: u32, u: usize) -> f64 {
        if round < 2 {
            return 1.0;
        }
        self.vertex_sigma.get(round as usize - 2).map_or(1.0, |r| r.factors[u])
    }

    pub fn schedule(&self) -> Schedule {
        Schedule { gamma: self.gamma_target.clone(), alpha: self.alpha_target.clone() }
    }

    /// Rejects a table built for another instance or framework, or one that
    /// is structurally malformed.
    pub fn check_matches(&self, graph: &Graph, framework: Framework) -> Result<()> {
        let mismatch = |what: String| Err(Error::TableMismatch(what));
        if self.framework != framework {
            return mismatch(format!("table is for {}, run asks for {framework}", self.framework));
        }
        if self.n != graph.instance().n || self.offline_count != graph.offline_count() {
            return mismatch(format!(
                "table shape n={} |U|={} vs instance n={} |U|={}",
                self.n,
                self.offline_count,
                graph.instance().n,
                graph.offline_count()
            ));
        }
        if self.instance_digest != graph.instance().digest() {
            return mismatch("instance digest differs".into());
        }
        let n = self.n as usize;
        if self.gamma_target.len() != n || self.alpha_target.len() != n {
            return mismatch("schedule length differs from n".into());
        }
        if self.alpha_target.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return mismatch("alpha target outside [0,1]".into());
        }
        let expected_rounds = if framework.attenuates_vertices() { n.saturating_sub(1) } else { 0 };
        if self.vertex_sigma.len() != expected_rounds {
            return mismatch(format!(
                "{} vertex factor rounds, expected {expected_rounds}",
                self.vertex_sigma.len()
            ));
        }
        for (i, r) in self.vertex_sigma.iter().enumerate() {
            if r.round as usize != i + 2 || r.factors.len() != self.offline_count {
                return mismatch(format!("malformed factors for round {}", r.round));
            }
            if r.factors.iter().any(|s| !(0.0..=1.0).contains(s)) {
                return mismatch(format!("factor outside [0,1] in round {}", r.round));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub epsilon: f64,
    pub seed: u64,
    /// Overrides the Chernoff sample size.
    pub samples: Option<u64>,
}

impl CalibrationConfig {
    pub fn new(epsilon: f64, seed: u64) -> Self {
        Self { epsilon, seed, samples: None }
    }
}

/// Builds the table for `framework`, calibrating vertex factors when the
/// framework uses them.
pub fn build_table(sim: &Simulator<'_>, framework: Framework, config: &CalibrationConfig) -> Result<AttenuationTable> {
    if framework.attenuates_vertices() {
        calibrate_vertex_sigma(sim, framework, config)
    } else {
        Ok(AttenuationTable::uncalibrated(sim.graph(), &sim.black_box().profile(), framework))
    }
}

/// Round-by-round vertex factor calibration for `Attn2` and `Attn3`.
pub fn calibrate_vertex_sigma(
    sim: &Simulator<'_>,
    framework: Framework,
    config: &CalibrationConfig,
) -> Result<AttenuationTable> {
    if !framework.attenuates_vertices() {
        return Err(Error::param("framework", format!("{framework} has no vertex attenuation")));
    }
    let graph = sim.graph();
    let n = graph.instance().n;
    let delta = default_delta(config.epsilon, n);
    let samples = match config.samples {
        Some(s) if s >= 1 => s,
        Some(_) => return Err(Error::param("samples", "must be at least 1")),
        None => sample_size(config.epsilon, delta, GAMMA_FLOOR)?,
    };
    let mut table = AttenuationTable::uncalibrated(graph, &sim.black_box().profile(), framework);
    table.calibration_meta = Some(CalibrationMeta {
        samples,
        epsilon: config.epsilon,
        delta,
        seed: config.seed,
        inner_trials: sim.options().inner_trials,
    });

    let m = graph.offline_count();
    for t in 2..=n {
        let policy = Policy::new(framework, &table, false);
        let counts = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng::stream(config.seed, &[tag::CALIBRATION, u64::from(t), i]);
                let state = sim.play_rounds(&policy, t - 1, &mut rng);
                state.safe_mask()
            })
            .fold(
                || vec![0u64; m],
                |mut acc, safe| {
                    for (c, s) in acc.iter_mut().zip(safe) {
                        *c += u64::from(s);
                    }
                    acc
                },
            )
            .reduce(|| vec![0u64; m], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());

        let target = table.gamma_target[t as usize - 1];
        let mut factors = Vec::with_capacity(m);
        for (u, &c) in counts.iter().enumerate() {
            let beta = c as f64 / samples as f64;
            if beta < target - config.epsilon {
                let warning = CalibrationWarning {
                    round: t,
                    offline: graph.instance().offline[u].id,
                    estimate: beta,
                    target,
                };
                log::warn!("{warning}");
                table.warnings.push(warning);
            }
            factors.push(if beta > target { target / beta } else { 1.0 });
        }
        table.vertex_sigma.push(RoundSigma { round: t, factors });
    }
    Ok(table)
}

/// Edge factors `a_e = clamp(alpha g_e / alpha'_e, 0, 1)` for one realized
/// star, with `alpha'_e` estimated from `inner_trials` unattenuated walks.
/// Edges with `g_e < eps / n` are left alone.
pub fn edge_factors_for_round(
    bb: &dyn BlackBox,
    star: &StarProblem,
    alpha_target: f64,
    inner_trials: u64,
    epsilon: f64,
    n: u32,
    rng: &mut SimRng,
) -> Vec<f64> {
    let estimates: Vec<f64> = crate::blackbox::estimate_probe_probs(bb, star, inner_trials, rng)
        .into_iter()
        .map(|e| e.mean)
        .collect();
    factors_from_estimates(star, &estimates, alpha_target, epsilon / f64::from(n))
}

pub(crate) fn factors_from_estimates(star: &StarProblem, estimates: &[f64], alpha: f64, min_g: f64) -> Vec<f64> {
    star.edges
        .iter()
        .zip(estimates)
        .map(|(s, &est)| {
            if s.g < min_g || est <= 0.0 {
                1.0
            } else {
                (alpha * s.g / est).clamp(0.0, 1.0)
            }
        })
        .collect()
}

/// Empirical probability that each offline vertex is safe at the start of
/// each round, after vertex attenuation. Index `[t - 1][u]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SafetyProfile {
    pub trials: u64,
    pub safe: Vec<Vec<f64>>,
}

impl SafetyProfile {
    pub fn stderr(&self, round: u32, u: usize) -> f64 {
        bernoulli_stderr(self.safe[round as usize - 1][u], self.trials)
    }
}

/// Re-plays the full horizon `trials` times and records safety per round.
pub fn measure_safety(
    sim: &Simulator<'_>,
    table: &AttenuationTable,
    two_sided: bool,
    trials: u64,
    seed: u64,
) -> Result<SafetyProfile> {
    table.check_matches(sim.graph(), table.framework)?;
    let graph = sim.graph();
    let n = graph.n();
    let m = graph.offline_count();
    let policy = Policy::new(table.framework, table, two_sided);
    let counts = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, &[tag::REMEASURE, i]);
            let mut state = RunState::new(graph);
            let mut seen = vec![0u64; n * m];
            for t in 1..=n as u32 {
                sim.begin_round(&mut state, &policy, t, &mut rng);
                for (u, &s) in state.safe.iter().enumerate() {
                    seen[(t as usize - 1) * m + u] += u64::from(s);
                }
                sim.play_arrival(&mut state, &policy, t, &mut rng);
            }
            seen
        })
        .reduce(|| vec![0u64; n * m], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    let safe = counts
        .chunks(m.max(1))
        .take(n)
        .map(|row| row.iter().map(|&c| c as f64 / trials as f64).collect())
        .collect();
    Ok(SafetyProfile { trials, safe })
}
