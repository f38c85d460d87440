//! The benchmark LP and the per-arrival star solutions derived from it.
//!
//! ```text
//! maximize   sum_e w_e f_e p_e
//! subject to sum_{e at u} f_e p_e <= 1        for every offline u
//!            sum_{e at v} f_e p_e <= r_v      for every online type v
//!            sum_{e at u} f_e     <= t_u      for every offline u
//!            sum_{e at v} f_e     <= t_v r_v  for every online type v
//!            0 <= f_e <= r_v
//! ```
//!
//! `f_e` is the expected number of probes of `e`. With one-sided timeouts the
//! offline patience row uses `t_u = n`.

pub mod simplex;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{EdgeId, Graph, StarEdge, StarProblem};

pub use simplex::{DenseLp, SimplexSolution};

/// Relative tolerance for constraint and optimality checks.
pub const LP_TOL: f64 = 1e-7;

/// Values below this are reported as exactly zero.
const ZERO_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    /// Probe intensity per edge, indexed by [`EdgeId`].
    pub f: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub one_sided: bool,
}

impl LpSolution {
    pub fn f(&self, e: EdgeId) -> f64 {
        self.f[e.0]
    }

    /// `F_u`: expected number of matches of `u` under the LP.
    pub fn offline_load(&self, graph: &Graph, u: usize) -> f64 {
        graph.offline_edges(u).iter().map(|&e| self.f(e) * graph.edge(e).prob).sum()
    }

    /// Lists the LP constraints this solution violates beyond [`LP_TOL`].
    pub fn violations(&self, graph: &Graph) -> Vec<String> {
        let n = graph.n() as f64;
        let tol = |bound: f64| LP_TOL * bound.abs().max(1.0);
        let mut out = Vec::new();
        for u in 0..graph.offline_count() {
            let edges = graph.offline_edges(u);
            let load = self.offline_load(graph, u);
            if load > 1.0 + tol(1.0) {
                out.push(format!("offline {u}: sum f p = {load} > 1"));
            }
            let t_u = if self.one_sided { n } else { f64::from(graph.offline_timeout(u)) };
            let probes: f64 = edges.iter().map(|&e| self.f(e)).sum();
            if probes > t_u + tol(t_u) {
                out.push(format!("offline {u}: sum f = {probes} > t_u = {t_u}"));
            }
        }
        for v in 0..graph.online_count() {
            let r = graph.rate(v);
            let edges = graph.online_edges(v);
            let load: f64 = edges.iter().map(|&e| self.f(e) * graph.edge(e).prob).sum();
            if load > r + tol(r) {
                out.push(format!("online {v}: sum f p = {load} > r_v = {r}"));
            }
            let cap = f64::from(graph.online_timeout(v)) * r;
            let probes: f64 = edges.iter().map(|&e| self.f(e)).sum();
            if probes > cap + tol(cap) {
                out.push(format!("online {v}: sum f = {probes} > t_v r_v = {cap}"));
            }
        }
        for (e, edge) in graph.edges() {
            let r = graph.rate(edge.v);
            let f = self.f(e);
            if !(f >= 0.0 && f <= r + tol(r)) {
                out.push(format!("edge {e}: f = {f} outside [0, r_v = {r}]"));
            }
        }
        out
    }
}

/// Builds the benchmark LP in the solver's dense form. Rows with no
/// coefficients are dropped.
pub fn benchmark_lp(graph: &Graph, one_sided: bool) -> DenseLp {
    let m = graph.edge_count();
    let n = graph.n() as f64;
    let mut lp = DenseLp::new(m);
    for (e, edge) in graph.edges() {
        lp.objective[e.0] = edge.weight * edge.prob;
    }
    let push = |lp: &mut DenseLp, edges: &[EdgeId], coef: &dyn Fn(EdgeId) -> f64, rhs: f64| {
        if edges.is_empty() {
            return;
        }
        let mut row = vec![0.0; m];
        for &e in edges {
            row[e.0] = coef(e);
        }
        lp.add_row(row, rhs);
    };
    let prob = |e: EdgeId| graph.edge(e).prob;
    let one = |_: EdgeId| 1.0;
    for u in 0..graph.offline_count() {
        push(&mut lp, graph.offline_edges(u), &prob, 1.0);
    }
    for v in 0..graph.online_count() {
        push(&mut lp, graph.online_edges(v), &prob, graph.rate(v));
    }
    for u in 0..graph.offline_count() {
        let t_u = if one_sided { n } else { f64::from(graph.offline_timeout(u)) };
        push(&mut lp, graph.offline_edges(u), &one, t_u);
    }
    for v in 0..graph.online_count() {
        let cap = f64::from(graph.online_timeout(v)) * graph.rate(v);
        push(&mut lp, graph.online_edges(v), &one, cap);
    }
    for (e, edge) in graph.edges() {
        push(&mut lp, &[e], &one, graph.rate(edge.v));
    }
    lp
}

/// Solves the benchmark LP to optimality.
pub fn solve_benchmark(graph: &Graph, one_sided: bool) -> Result<LpSolution> {
    let solution = benchmark_lp(graph, one_sided).solve()?;
    let f: Vec<f64> = solution.x.iter().map(|&x| if x < ZERO_CLAMP { 0.0 } else { x }).collect();
    let objective = graph.edges().map(|(e, edge)| edge.weight * edge.prob * f[e.0]).sum();
    Ok(LpSolution { f, objective, dual_objective: solution.dual_objective, one_sided })
}

/// Star of online type `v` over `safe_edges` with `g_e = f_e / r_v`.
pub fn induce_star(graph: &Graph, lp: &LpSolution, v: usize, safe_edges: &[EdgeId]) -> StarProblem {
    let r = graph.rate(v);
    let edges = safe_edges
        .iter()
        .map(|&e| {
            let edge = graph.edge(e);
            debug_assert_eq!(edge.v, v, "edge {e} is not incident to type {v}");
            StarEdge { edge: e, prob: edge.prob, g: (lp.f(e) / r).clamp(0.0, 1.0) }
        })
        .collect();
    let star = StarProblem::new(v, graph.online_timeout(v), edges);
    debug_assert!(star.check_feasible().is_ok(), "{:?}", star.check_feasible());
    star
}

/// `lambda(e, g)`: the `g p` mass of every other edge of the star.
pub fn lambda(star: &StarProblem, e: EdgeId) -> Result<f64> {
    let pos = star.position(e).ok_or(Error::UnknownEdge(e))?;
    Ok(lambda_at(star, pos))
}

pub(crate) fn lambda_at(star: &StarProblem, pos: usize) -> f64 {
    star.edges
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != pos)
        .map(|(_, s)| s.g * s.prob)
        .sum()
}
