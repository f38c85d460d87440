//! Problem instances: data model, validation, generators and the JSON format.
//!
//! An [`Instance`] is the plain serializable description. A [`Graph`] is the
//! validated, index-based view every algorithm works on.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng;

/// Absolute tolerance on `sum r_v == n`.
pub const RATE_SUM_TOL: f64 = 1e-9;

/// Tolerance used when checking star feasibility.
pub const STAR_TOL: f64 = 1e-7;

/// Position of an edge in [`Instance::edges`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub usize);

impl EdgeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineVertex {
    pub id: u32,
    /// Probe budget across all rounds (only binding with two-sided timeouts).
    #[serde(rename = "t")]
    pub timeout: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineType {
    pub id: u32,
    /// Probes allowed per arrival.
    #[serde(rename = "t")]
    pub timeout: u32,
    /// Expected number of arrivals over the horizon.
    #[serde(rename = "r")]
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    #[serde(rename = "p")]
    pub prob: f64,
    #[serde(rename = "w")]
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    /// Number of rounds.
    pub n: u32,
    pub offline: Vec<OfflineVertex>,
    pub online: Vec<OnlineType>,
    pub edges: Vec<Edge>,
}

/// A single broken invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl Instance {
    /// Lists every broken invariant. Empty iff the instance is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n == 0 {
            out.push(Violation::new("n", "horizon must be at least 1"));
        }

        let mut offline_ids = HashSet::new();
        for (i, u) in self.offline.iter().enumerate() {
            if u.timeout == 0 {
                out.push(Violation::new(format!("offline[{i}].t"), "timeout must be at least 1"));
            }
            if !offline_ids.insert(u.id) {
                out.push(Violation::new(format!("offline[{i}].id"), format!("duplicate id {}", u.id)));
            }
        }

        let mut online_ids = HashSet::new();
        let mut rate_sum = 0.0;
        for (i, v) in self.online.iter().enumerate() {
            if v.timeout == 0 {
                out.push(Violation::new(format!("online[{i}].t"), "timeout must be at least 1"));
            }
            if !(v.rate > 0.0 && v.rate <= 1.0) {
                out.push(Violation::new(
                    format!("online[{i}].r"),
                    format!("rate {} out of (0,1]", v.rate),
                ));
            }
            if !online_ids.insert(v.id) {
                out.push(Violation::new(format!("online[{i}].id"), format!("duplicate id {}", v.id)));
            }
            rate_sum += v.rate;
        }
        let drift = (rate_sum - f64::from(self.n)).abs();
        if drift.is_nan() || drift > RATE_SUM_TOL {
            out.push(Violation::new(
                "online.r",
                format!("sum of rates {rate_sum} != n = {}", self.n),
            ));
        }

        let mut pairs = HashSet::new();
        for (i, e) in self.edges.iter().enumerate() {
            if !(0.0..=1.0).contains(&e.prob) {
                out.push(Violation::new(format!("edges[{i}].p"), format!("p {} out of [0,1]", e.prob)));
            }
            if !(e.weight >= 0.0 && e.weight.is_finite()) {
                out.push(Violation::new(format!("edges[{i}].w"), format!("weight {} must be >= 0", e.weight)));
            }
            if !offline_ids.contains(&e.u) {
                out.push(Violation::new(format!("edges[{i}].u"), format!("unknown offline vertex {}", e.u)));
            }
            if !online_ids.contains(&e.v) {
                out.push(Violation::new(format!("edges[{i}].v"), format!("unknown online type {}", e.v)));
            }
            if !pairs.insert((e.u, e.v)) {
                out.push(Violation::new(
                    format!("edges[{i}]"),
                    format!("duplicate edge ({}, {})", e.u, e.v),
                ));
            }
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Hex SHA-256 of the compact JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("instance serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// The stochasticity-gap instance: complete `n x n`, `p = 1/n`, `w = 1`,
/// every timeout `n`, every rate 1.
pub fn gap_instance(n: u32) -> Instance {
    assert!(n >= 1, "gap instance needs n >= 1");
    let p = 1.0 / f64::from(n);
    Instance {
        n,
        offline: (0..n).map(|id| OfflineVertex { id, timeout: n }).collect(),
        online: (0..n).map(|id| OnlineType { id, timeout: n, rate: 1.0 }).collect(),
        edges: (0..n)
            .flat_map(|u| (0..n).map(move |v| Edge { u, v, prob: p, weight: 1.0 }))
            .collect(),
    }
}

/// How [`random_instance`] assigns arrival rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateMode {
    /// Every `r_v = 1` and the horizon equals the number of online types.
    Integral,
    /// Rates in `(0,1]` renormalized to sum to `horizon`, which must not
    /// exceed the number of online types.
    Fractional { horizon: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomSpec {
    pub offline: u32,
    pub online: u32,
    /// Probability that each `(u, v)` pair becomes an edge.
    pub density: f64,
    pub rates: RateMode,
    /// Online timeouts are drawn from `1..=max_online_timeout`.
    pub max_online_timeout: u32,
    /// Probabilities are drawn from `[min_prob, 1)`.
    pub min_prob: f64,
}

impl RandomSpec {
    pub fn new(offline: u32, online: u32, density: f64, rates: RateMode) -> Self {
        Self { offline, online, density, rates, max_online_timeout: 3, min_prob: 0.05 }
    }
}

/// Random valid instance, deterministic in `seed`.
pub fn random_instance(seed: u64, spec: &RandomSpec) -> Result<Instance> {
    if spec.offline == 0 || spec.online == 0 {
        return Err(Error::param("sizes", "both sides need at least one vertex"));
    }
    if !(spec.density > 0.0 && spec.density <= 1.0) {
        return Err(Error::param("density", format!("{} not in (0,1]", spec.density)));
    }
    if spec.max_online_timeout == 0 {
        return Err(Error::param("max_online_timeout", "must be at least 1"));
    }
    if !(0.0..1.0).contains(&spec.min_prob) {
        return Err(Error::param("min_prob", format!("{} not in [0,1)", spec.min_prob)));
    }
    let n = match spec.rates {
        RateMode::Integral => spec.online,
        RateMode::Fractional { horizon } => {
            if horizon == 0 || horizon > spec.online {
                return Err(Error::param(
                    "horizon",
                    format!("fractional rates need 1 <= n <= |V| = {}", spec.online),
                ));
            }
            horizon
        }
    };

    let mut rng = rng::from_seed(seed);
    let offline = (0..spec.offline)
        .map(|id| OfflineVertex { id, timeout: rng.gen_range(1..=n) })
        .collect();
    let raw: Vec<f64> = (0..spec.online).map(|_| rng.gen_range(0.1..=1.0)).collect();
    let rates = match spec.rates {
        RateMode::Integral => vec![1.0; spec.online as usize],
        RateMode::Fractional { horizon } => fill_rates(&raw, f64::from(horizon)),
    };
    let online = rates
        .iter()
        .enumerate()
        .map(|(id, &rate)| OnlineType {
            id: id as u32,
            timeout: rng.gen_range(1..=spec.max_online_timeout),
            rate,
        })
        .collect();

    let mut edges = Vec::new();
    for u in 0..spec.offline {
        for v in 0..spec.online {
            if rng.gen::<f64>() < spec.density {
                edges.push(Edge {
                    u,
                    v,
                    prob: rng.gen_range(spec.min_prob..1.0),
                    weight: rng.gen_range(0.5..2.0),
                });
            }
        }
    }
    if edges.is_empty() {
        return Err(Error::param("density", "generated instance has no edges"));
    }
    Ok(Instance { n, offline, online, edges })
}

/// Scales `raw` to sum to `total` while capping each entry at 1.
fn fill_rates(raw: &[f64], total: f64) -> Vec<f64> {
    let mut capped = vec![false; raw.len()];
    let mut rates = raw.to_vec();
    loop {
        let fixed = capped.iter().filter(|&&c| c).count() as f64;
        let free_sum: f64 = raw.iter().zip(&capped).filter(|(_, &c)| !c).map(|(x, _)| x).sum();
        let scale = (total - fixed) / free_sum;
        let mut changed = false;
        for i in 0..raw.len() {
            if capped[i] {
                rates[i] = 1.0;
            } else {
                rates[i] = raw[i] * scale;
                if rates[i] > 1.0 {
                    capped[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    // Push float dust from the scaling into the largest uncapped rate.
    let drift = total - rates.iter().sum::<f64>();
    if let Some(i) = (0..rates.len())
        .filter(|&i| !capped[i])
        .max_by(|&a, &b| rates[a].total_cmp(&rates[b]))
    {
        rates[i] = (rates[i] + drift).min(1.0);
    }
    rates
}

/// An edge with endpoints resolved to dense indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEdge {
    pub u: usize,
    pub v: usize,
    pub prob: f64,
    pub weight: f64,
}

/// Validated, index-based view of an [`Instance`]. Immutable once built.
#[derive(Debug, Clone)]
pub struct Graph {
    instance: Instance,
    edges: Vec<GraphEdge>,
    by_online: Vec<Vec<EdgeId>>,
    by_offline: Vec<Vec<EdgeId>>,
    arrival_cdf: Vec<f64>,
}

impl Graph {
    pub fn new(instance: &Instance) -> Result<Self> {
        let violations = instance.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidInstance(violations));
        }
        let offline_pos: HashMap<u32, usize> =
            instance.offline.iter().enumerate().map(|(i, u)| (u.id, i)).collect();
        let online_pos: HashMap<u32, usize> =
            instance.online.iter().enumerate().map(|(i, v)| (v.id, i)).collect();

        let mut by_online = vec![Vec::new(); instance.online.len()];
        let mut by_offline = vec![Vec::new(); instance.offline.len()];
        let edges = instance
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let (u, v) = (offline_pos[&e.u], online_pos[&e.v]);
                by_offline[u].push(EdgeId(i));
                by_online[v].push(EdgeId(i));
                GraphEdge { u, v, prob: e.prob, weight: e.weight }
            })
            .collect();

        let n = f64::from(instance.n);
        let mut acc = 0.0;
        let arrival_cdf = instance
            .online
            .iter()
            .map(|v| {
                acc += v.rate / n;
                acc
            })
            .collect();

        Ok(Self { instance: instance.clone(), edges, by_online, by_offline, arrival_cdf })
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn n(&self) -> usize {
        self.instance.n as usize
    }

    pub fn offline_count(&self) -> usize {
        self.instance.offline.len()
    }

    pub fn online_count(&self) -> usize {
        self.instance.online.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: EdgeId) -> &GraphEdge {
        &self.edges[e.0]
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = (EdgeId, &GraphEdge)> {
        self.edges.iter().enumerate().map(|(i, e)| (EdgeId(i), e))
    }

    pub fn online_edges(&self, v: usize) -> &[EdgeId] {
        &self.by_online[v]
    }

    pub fn offline_edges(&self, u: usize) -> &[EdgeId] {
        &self.by_offline[u]
    }

    pub fn offline_timeout(&self, u: usize) -> u32 {
        self.instance.offline[u].timeout
    }

    pub fn online_timeout(&self, v: usize) -> u32 {
        self.instance.online[v].timeout
    }

    pub fn rate(&self, v: usize) -> f64 {
        self.instance.online[v].rate
    }

    /// Per-round arrival probability of type `v`, `r_v / n`.
    pub fn arrival_prob(&self, v: usize) -> f64 {
        self.rate(v) / f64::from(self.instance.n)
    }

    /// Draws the arriving type for one round.
    pub fn sample_arrival<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let x: f64 = rng.gen();
        let i = self.arrival_cdf.partition_point(|&c| c <= x);
        // Float dust can leave the last cumulative value just below 1.
        i.min(self.arrival_cdf.len() - 1)
    }
}

/// One edge of a star: its id, probability and fractional value `g_e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarEdge {
    #[serde(rename = "id")]
    pub edge: EdgeId,
    #[serde(rename = "p")]
    pub prob: f64,
    pub g: f64,
}

/// The star graph of one arrival with a fractional point of the star polytope
/// `{ sum g p <= 1, sum g <= t_v, 0 <= g <= 1 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarProblem {
    /// Index of the online type at the center.
    #[serde(default)]
    pub center: usize,
    /// Patience `t_v` of the arrival.
    pub patience: u32,
    pub edges: Vec<StarEdge>,
}

impl StarProblem {
    pub fn new(center: usize, patience: u32, edges: Vec<StarEdge>) -> Self {
        Self { center, patience, edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn position(&self, edge: EdgeId) -> Option<usize> {
        self.edges.iter().position(|s| s.edge == edge)
    }

    pub fn mass(&self) -> f64 {
        self.edges.iter().map(|s| s.g).sum()
    }

    pub fn load(&self) -> f64 {
        self.edges.iter().map(|s| s.g * s.prob).sum()
    }

    /// Checks membership in the star polytope up to [`STAR_TOL`].
    pub fn check_feasible(&self) -> Result<()> {
        for s in &self.edges {
            if !(s.g >= -STAR_TOL && s.g <= 1.0 + STAR_TOL) {
                return Err(Error::InfeasibleStar(format!("g[{}] = {} outside [0,1]", s.edge, s.g)));
            }
            if !(0.0..=1.0).contains(&s.prob) {
                return Err(Error::InfeasibleStar(format!("p[{}] = {} outside [0,1]", s.edge, s.prob)));
            }
        }
        let load = self.load();
        if load > 1.0 + STAR_TOL {
            return Err(Error::InfeasibleStar(format!("sum g*p = {load} > 1")));
        }
        let mass = self.mass();
        let budget = f64::from(self.patience);
        if mass > budget + STAR_TOL * budget.max(1.0) {
            return Err(Error::InfeasibleStar(format!("sum g = {mass} > patience {}", self.patience)));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
