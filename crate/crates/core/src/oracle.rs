//! Exact baselines for tiny inputs.
//!
//! [`optimal_online_dp`] computes the value of the best online probing policy
//! by backward induction over rounds. The state records, for each offline
//! vertex, whether it is still available (one-sided) or how many probes it
//! has left, 0 meaning gone (two-sided). Arrivals are averaged exactly with
//! weights `r_v / n`; within a round the adaptive probing tree over the
//! arrived star is optimized by memoized recursion over the set of edges
//! already tried.
//!
//! [`exact_star_probe_probs`] enumerates every branch of the dependent
//! rounding, every probing order and every success pattern of `BB_UR`.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Graph, StarProblem};
use crate::rounding::{is_fractional, pair_step, snap};

/// Largest `n * (number of states per round)` the DP accepts.
pub const MAX_STATES: u128 = 10_000_000;

/// Largest star degree the within-round search accepts.
pub const MAX_DP_DEGREE: usize = 20;

/// Largest star [`exact_star_probe_probs`] accepts.
pub const MAX_STAR_EDGES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolicyValue {
    pub expected_weight: f64,
    pub state_count: u64,
}

/// Expected weight of the optimal online policy.
pub fn optimal_online_dp(graph: &Graph, two_sided: bool) -> Result<PolicyValue> {
    let m = graph.offline_count();
    let n = graph.instance().n;
    let radix: Vec<usize> = (0..m)
        .map(|u| if two_sided { graph.offline_timeout(u) as usize + 1 } else { 2 })
        .collect();
    let per_round = radix.iter().try_fold(1u128, |acc, &r| acc.checked_mul(r as u128));
    let total = per_round.and_then(|s| s.checked_mul(u128::from(n)));
    match total {
        Some(t) if t <= MAX_STATES => {}
        other => return Err(Error::StateSpaceTooLarge { states: other.unwrap_or(u128::MAX), limit: MAX_STATES }),
    }
    for v in 0..graph.online_count() {
        let d = graph.online_edges(v).len();
        if d > MAX_DP_DEGREE {
            return Err(Error::StarTooLarge { edges: d, limit: MAX_DP_DEGREE });
        }
    }
    let states = per_round.expect("checked above") as usize;
    let mut mult = vec![1usize; m];
    for u in 1..m {
        mult[u] = mult[u - 1] * radix[u - 1];
    }

    let mut next = vec![0.0; states];
    for _ in 0..n {
        let mut cur = vec![0.0; states];
        for (s, value) in cur.iter_mut().enumerate() {
            let mut total = 0.0;
            for v in 0..graph.online_count() {
                let q = graph.arrival_prob(v);
                if q == 0.0 {
                    continue;
                }
                let mut round = RoundSearch { graph, v, mult: &mult, radix: &radix, next: &next, two_sided, memo: HashMap::new() };
                total += q * round.best(0, s);
            }
            *value = total;
        }
        next = cur;
    }
    let start: usize = (0..m).map(|u| (radix[u] - 1) * mult[u]).sum();
    Ok(PolicyValue { expected_weight: next[start], state_count: (states as u64) * u64::from(n) })
}

struct RoundSearch<'a> {
    graph: &'a Graph,
    v: usize,
    mult: &'a [usize],
    radix: &'a [usize],
    next: &'a [f64],
    two_sided: bool,
    memo: HashMap<u64, f64>,
}

impl RoundSearch<'_> {
    /// Best value from here given the edges already tried (all failed) and
    /// the current state.
    fn best(&mut self, tried: u64, state: usize) -> f64 {
        if let Some(&v) = self.memo.get(&tried) {
            return v;
        }
        let mut best = self.next[state];
        let edges = self.graph.online_edges(self.v);
        if tried.count_ones() < self.graph.online_timeout(self.v) {
            for (i, &e) in edges.iter().enumerate() {
                if tried & (1 << i) != 0 {
                    continue;
                }
                let edge = self.graph.edge(e);
                let u = edge.u;
                let digit = (state / self.mult[u]) % self.radix[u];
                if digit == 0 {
                    continue;
                }
                let matched = state - digit * self.mult[u];
                let failed = if self.two_sided { state - self.mult[u] } else { state };
                let value = edge.prob * (edge.weight + self.next[matched])
                    + (1.0 - edge.prob) * self.best(tried | (1 << i), failed);
                best = best.max(value);
            }
        }
        self.memo.insert(tried, best);
        best
    }
}

/// Exact probe probability of every star edge under `BB_UR`, aligned with
/// `star.edges`.
pub fn exact_star_probe_probs(star: &StarProblem) -> Result<Vec<f64>> {
    if star.len() > MAX_STAR_EDGES {
        return Err(Error::StarTooLarge { edges: star.len(), limit: MAX_STAR_EDGES });
    }
    // Enumeration does not need the star polytope, only values in [0,1].
    if let Some(s) = star.edges.iter().find(|s| !(0.0..=1.0).contains(&s.g) || !(0.0..=1.0).contains(&s.prob)) {
        return Err(Error::InfeasibleStar(format!("edge {} has g = {}, p = {}", s.edge, s.g, s.prob)));
    }
    let mut values: Vec<f64> = star.edges.iter().map(|s| snap(s.g)).collect();
    let mut outcomes = Vec::new();
    enumerate_rounding(&mut values, 0, None, 1.0, &mut outcomes);

    let mut probs = vec![0.0; star.len()];
    let patience = star.patience as usize;
    for (weight, rounded) in outcomes {
        let chosen: Vec<usize> = (0..star.len()).filter(|&i| rounded[i] == 1.0).collect();
        let orders = permutations(&chosen);
        let share = weight / orders.len() as f64;
        for order in &orders {
            let mut reach = 1.0;
            for &i in order.iter().take(patience) {
                probs[i] += share * reach;
                reach *= 1.0 - star.edges[i].prob;
            }
        }
    }
    Ok(probs)
}

/// Every leaf of the rounding process with its probability, following the
/// same pairing order as the sampler.
fn enumerate_rounding(values: &mut [f64], from: usize, carry: Option<usize>, weight: f64, out: &mut Vec<(f64, Vec<f64>)>) {
    if weight == 0.0 {
        return;
    }
    let Some(j) = (from..values.len()).find(|&j| is_fractional(values[j])) else {
        match carry {
            None => out.push((weight, values.to_vec())),
            Some(i) => {
                let x = values[i];
                for (p, bit) in [(x, 1.0), (1.0 - x, 0.0)] {
                    values[i] = bit;
                    enumerate_rounding(values, values.len(), None, weight * p, out);
                }
                values[i] = x;
            }
        }
        return;
    };
    let Some(i) = carry else {
        enumerate_rounding(values, j + 1, Some(j), weight, out);
        return;
    };
    let (x0, y0) = (values[i], values[j]);
    for (p, x, y) in pair_step(x0, y0) {
        values[i] = x;
        values[j] = y;
        let next = if is_fractional(x) {
            Some(i)
        } else if is_fractional(y) {
            Some(j)
        } else {
            None
        };
        enumerate_rounding(values, j + 1, next, weight * p, out);
    }
    values[i] = x0;
    values[j] = y0;
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}
