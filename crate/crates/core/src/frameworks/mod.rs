//! The online algorithms.
//!
//! Every round one online type arrives, drawn with probability `r_v / n`. Its
//! safe neighbours form a star whose `g` comes from the LP, and the black box
//! walks that star. The frameworks differ only in what they do around the
//! black box:
//!
//! - `Attn1` scales each edge's probe probability down to `alpha g_e`.
//! - `Attn2` discards safe offline vertices so each is safe at round `t` with
//!   probability `gamma_t`.
//! - `Attn3` does both, following the recurrence schedule.
//!
//! In two-sided mode (`Attn1` only) every real probe uses up one unit of the
//! offline vertex's patience and the vertex leaves the safe set at zero.

pub mod ratios;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::Rng;
use serde::Serialize;

use crate::blackbox::{estimate_probe_probs, BlackBox};
use crate::calibration::{factors_from_estimates, AttenuationTable, Framework, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::instance::{EdgeId, Graph};
use crate::lp::{induce_star, LpSolution};
use crate::rng::{self, tag, SimRng};

pub use ratios::{
    attn1_finite, attn2_finite, attn3_finite, decay_curve, lower_bound_check, ratio_attn1, ratio_attn2,
    ratio_attn3, ratio_two_sided, two_sided_finite, ODE_STEP,
};

/// Default number of inner walks used to estimate unattenuated probe
/// probabilities on a realized star.
pub const DEFAULT_INNER_TRIALS: u64 = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub epsilon: f64,
    pub inner_trials: u64,
    /// Seed of the per-star inner estimates.
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { epsilon: DEFAULT_EPSILON, inner_trials: DEFAULT_INNER_TRIALS, seed: 0 }
    }
}

/// What a run does on top of the black box.
#[derive(Debug, Clone, Copy)]
pub struct Policy<'t> {
    pub framework: Framework,
    pub table: &'t AttenuationTable,
    pub two_sided: bool,
}

impl<'t> Policy<'t> {
    pub fn new(framework: Framework, table: &'t AttenuationTable, two_sided: bool) -> Self {
        Self { framework, table, two_sided }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchRecord {
    pub edge: EdgeId,
    pub round: u32,
    pub weight: f64,
}

/// State of one run between rounds.
#[derive(Debug, Clone)]
pub struct RunState {
    pub round: u32,
    /// Not matched, not discarded, and with patience left in two-sided mode.
    pub safe: Vec<bool>,
    pub remaining_probes: Vec<u32>,
    pub matched: Vec<bool>,
    pub weight: f64,
    pub matches: Vec<MatchRecord>,
    /// Real probes per edge.
    pub probes: Vec<u32>,
    pub pretend: u64,
}

impl RunState {
    pub fn new(graph: &Graph) -> Self {
        let m = graph.offline_count();
        Self {
            round: 0,
            safe: vec![true; m],
            remaining_probes: (0..m).map(|u| graph.offline_timeout(u)).collect(),
            matched: vec![false; m],
            weight: 0.0,
            matches: Vec::new(),
            probes: vec![0; graph.edge_count()],
            pretend: 0,
        }
    }

    pub fn safe_mask(&self) -> Vec<bool> {
        self.safe.clone()
    }

    pub fn into_record(self) -> TrialRecord {
        TrialRecord { weight: self.weight, matches: self.matches, probes: self.probes, pretend: self.pretend }
    }
}

/// Outcome of one full run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub weight: f64,
    pub matches: Vec<MatchRecord>,
    /// Real probes per edge, indexed by [`EdgeId`].
    pub probes: Vec<u32>,
    pub pretend: u64,
}

type StarKey = (usize, Vec<u64>);

/// Runs the frameworks on one instance.
///
/// Unattenuated probe estimates depend only on the realized star, i.e. on the
/// arriving type and which of its neighbours are safe. They are computed once
/// per star from a seed derived from that star and cached, so results do not
/// depend on trial order or thread count.
pub struct Simulator<'a> {
    graph: &'a Graph,
    lp: &'a LpSolution,
    bb: &'a dyn BlackBox,
    options: RunOptions,
    cache: RwLock<HashMap<StarKey, Arc<[f64]>>>,
}

impl<'a> Simulator<'a> {
    pub fn new(graph: &'a Graph, lp: &'a LpSolution, bb: &'a dyn BlackBox, options: RunOptions) -> Self {
        Self { graph, lp, bb, options, cache: RwLock::new(HashMap::new()) }
    }

    pub fn graph(&self) -> &'a Graph {
        self.graph
    }

    pub fn lp(&self) -> &'a LpSolution {
        self.lp
    }

    pub fn black_box(&self) -> &'a dyn BlackBox {
        self.bb
    }

    pub fn options(&self) -> &RunOptions {
        &self.options
    }

    /// Number of distinct stars estimated so far.
    pub fn cached_stars(&self) -> usize {
        self.cache.read().expect("cache lock").len()
    }

    /// Plays rounds `1..=rounds` from a fresh state.
    pub fn play_rounds(&self, policy: &Policy<'_>, rounds: u32, rng: &mut SimRng) -> RunState {
        let mut state = RunState::new(self.graph);
        for t in 1..=rounds {
            self.begin_round(&mut state, policy, t, rng);
            self.play_arrival(&mut state, policy, t, rng);
        }
        state
    }

    /// One full run with an already-checked policy.
    pub fn run_trial(&self, policy: &Policy<'_>, rng: &mut SimRng) -> TrialRecord {
        self.play_rounds(policy, self.graph.instance().n, rng).into_record()
    }

    /// Vertex attenuation at the start of round `t`.
    pub fn begin_round(&self, state: &mut RunState, policy: &Policy<'_>, t: u32, rng: &mut SimRng) {
        state.round = t;
        if !policy.framework.attenuates_vertices() || t < 2 {
            return;
        }
        for u in 0..state.safe.len() {
            if !state.safe[u] {
                continue;
            }
            let sigma = policy.table.sigma(t, u);
            if sigma < 1.0 && rng.gen::<f64>() >= sigma {
                state.safe[u] = false;
            }
        }
    }

    /// Arrival, star, black box and commit for round `t`.
    pub fn play_arrival(&self, state: &mut RunState, policy: &Policy<'_>, t: u32, rng: &mut SimRng) {
        let graph = self.graph;
        let v = graph.sample_arrival(rng);
        let all = graph.online_edges(v);
        let mut mask = vec![0u64; all.len().div_ceil(64)];
        let mut safe_edges = Vec::with_capacity(all.len());
        for (i, &e) in all.iter().enumerate() {
            if state.safe[graph.edge(e).u] {
                safe_edges.push(e);
                mask[i / 64] |= 1 << (i % 64);
            }
        }
        if safe_edges.is_empty() {
            return;
        }
        let star = induce_star(graph, self.lp, v, &safe_edges);
        let factors = if policy.framework.attenuates_edges() {
            let estimates = self.star_estimates(v, mask, &star);
            let alpha = policy.table.alpha_target[t as usize - 1];
            let min_g = self.options.epsilon / f64::from(graph.instance().n);
            Some(factors_from_estimates(&star, &estimates, alpha, min_g))
        } else {
            None
        };
        let outcome = self.bb.run(&star, rng, factors.as_deref());

        assert!(outcome.events() <= star.patience as usize, "online patience exceeded");
        state.pretend += outcome.pretend.len() as u64;
        for &e in &outcome.probed {
            let u = graph.edge(e).u;
            assert!(state.safe[u], "probed an unsafe offline vertex");
            state.probes[e.0] += 1;
            if policy.two_sided {
                assert!(state.remaining_probes[u] > 0, "offline patience exceeded");
                state.remaining_probes[u] -= 1;
            }
        }
        if let Some(e) = outcome.matched {
            let edge = graph.edge(e);
            assert!(!state.matched[edge.u], "offline vertex matched twice");
            state.matched[edge.u] = true;
            state.safe[edge.u] = false;
            state.weight += edge.weight;
            state.matches.push(MatchRecord { edge: e, round: t, weight: edge.weight });
        }
        if policy.two_sided {
            for &e in &outcome.probed {
                let u = graph.edge(e).u;
                if state.remaining_probes[u] == 0 {
                    state.safe[u] = false;
                }
            }
        }
    }

    fn star_estimates(&self, v: usize, mask: Vec<u64>, star: &crate::instance::StarProblem) -> Arc<[f64]> {
        let key = (v, mask);
        if let Some(hit) = self.cache.read().expect("cache lock").get(&key) {
            return hit.clone();
        }
        let mut path = vec![tag::STAR_CACHE, v as u64];
        path.extend_from_slice(&key.1);
        let mut r = rng::stream(self.options.seed, &path);
        let est: Arc<[f64]> = estimate_probe_probs(self.bb, star, self.options.inner_trials, &mut r)
            .into_iter()
            .map(|e| e.mean)
            .collect();
        self.cache.write().expect("cache lock").entry(key).or_insert(est).clone()
    }
}

/// Checks that `table` and `two_sided` fit this simulator.
pub fn check_policy(sim: &Simulator<'_>, framework: Framework, table: &AttenuationTable, two_sided: bool) -> Result<()> {
    if two_sided && framework != Framework::Attn1 {
        return Err(Error::param("two_sided", format!("two-sided timeouts need attn1, got {framework}")));
    }
    if two_sided == sim.lp().one_sided {
        return Err(Error::param(
            "two_sided",
            "LP was solved for the other timeout model".to_string(),
        ));
    }
    table.check_matches(sim.graph(), framework)
}

/// One simulated run of `framework`.
pub fn run_online(
    sim: &Simulator<'_>,
    framework: Framework,
    table: &AttenuationTable,
    rng: &mut SimRng,
    two_sided: bool,
) -> Result<TrialRecord> {
    check_policy(sim, framework, table, two_sided)?;
    Ok(sim.run_trial(&Policy::new(framework, table, two_sided), rng))
}
