//! Fixtures and small helpers shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use stomatch::instance::{gap_instance, random_instance, Edge, OfflineVertex, OnlineType, RandomSpec, RateMode};
use stomatch::{EdgeId, Instance, StarEdge, StarProblem};

pub fn single_edge(prob: f64, weight: f64) -> Instance {
    Instance {
        n: 1,
        offline: vec![OfflineVertex { id: 0, timeout: 1 }],
        online: vec![OnlineType { id: 0, timeout: 1, rate: 1.0 }],
        edges: vec![Edge { u: 0, v: 0, prob, weight }],
    }
}

/// One offline vertex, two rate-1 types, only the first adjacent.
pub fn two_chances(prob: f64) -> Instance {
    Instance {
        n: 2,
        offline: vec![OfflineVertex { id: 0, timeout: 2 }],
        online: vec![OnlineType { id: 0, timeout: 1, rate: 1.0 }, OnlineType { id: 1, timeout: 1, rate: 1.0 }],
        edges: vec![Edge { u: 0, v: 0, prob, weight: 1.0 }],
    }
}

fn random(seed: u64, offline: u32, online: u32, density: f64, rates: RateMode) -> Instance {
    random_instance(seed, &RandomSpec::new(offline, online, density, rates)).expect("fixture generates")
}

/// At most 3 offline vertices and horizon at most 4.
pub fn tiny_instances() -> Vec<(String, Instance)> {
    let mut out = vec![
        ("single".to_string(), single_edge(0.5, 1.0)),
        ("two-chances".to_string(), two_chances(0.5)),
        ("gap2".to_string(), gap_instance(2)),
        ("gap3".to_string(), gap_instance(3)),
    ];
    for seed in 0..3 {
        out.push((format!("random3x4-{seed}"), random(seed, 3, 4, 0.6, RateMode::Integral)));
    }
    for seed in 10..12 {
        out.push((format!("frac3x4-{seed}"), random(seed, 3, 4, 0.7, RateMode::Fractional { horizon: 3 })));
    }
    out
}

/// Desk-scale instances with horizon at most 20.
pub fn desk_instances() -> Vec<(String, Instance)> {
    let mut tight = gap_instance(5);
    for u in &mut tight.offline {
        u.timeout = 1;
    }
    vec![
        ("gap5".to_string(), gap_instance(5)),
        ("gap5-t1".to_string(), tight),
        ("gap10".to_string(), gap_instance(10)),
        ("random6x8".to_string(), random(21, 6, 8, 0.4, RateMode::Integral)),
        ("frac5x12".to_string(), random(22, 5, 12, 0.3, RateMode::Fractional { horizon: 10 })),
        ("random8x20".to_string(), random(23, 8, 20, 0.2, RateMode::Integral)),
    ]
}

pub fn star(g: &[f64], p: &[f64], patience: u32) -> StarProblem {
    assert_eq!(g.len(), p.len());
    StarProblem::new(
        0,
        patience,
        g.iter()
            .zip(p)
            .enumerate()
            .map(|(i, (&g, &prob))| StarEdge { edge: EdgeId(i), prob, g })
            .collect(),
    )
}

/// Feasible stars with at most 4 edges.
pub fn small_stars() -> Vec<StarProblem> {
    vec![
        star(&[1.0], &[0.3], 1),
        star(&[0.5, 0.5], &[0.5, 0.5], 1),
        star(&[1.0, 1.0], &[0.5, 0.5], 2),
        star(&[0.3, 0.4, 0.3], &[0.2, 0.9, 0.5], 1),
        star(&[0.8, 0.6, 0.5], &[0.5, 0.4, 0.6], 2),
        star(&[0.7, 0.4, 0.9, 0.6], &[0.3, 0.5, 0.2, 0.4], 3),
        star(&[0.25, 0.25, 0.25, 0.25], &[0.9, 0.9, 0.9, 0.9], 2),
        star(&[0.9, 0.9, 0.9, 0.9], &[0.1, 0.2, 0.05, 0.15], 4),
        star(&[0.6, 0.9, 0.35, 0.15], &[0.4, 0.3, 0.7, 0.8], 2),
    ]
}

/// Feasible stars used for rounding checks, up to 6 edges.
pub fn rounding_stars() -> Vec<StarProblem> {
    let mut out = small_stars();
    out.push(star(&[0.5, 0.3, 0.7, 0.2, 0.6, 0.4], &[0.1; 6], 3));
    out.push(star(&[0.45, 0.45, 0.45, 0.45, 0.45], &[0.2; 5], 3));
    out
}

/// Uniformly scaled random point of the star polytope with `k` edges.
pub fn random_star<R: Rng>(rng: &mut R, k: usize) -> StarProblem {
    let p: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let mut g: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
    let patience = rng.gen_range(1..=k as u32);
    let load: f64 = g.iter().zip(&p).map(|(g, p)| g * p).sum();
    let mass: f64 = g.iter().sum();
    let scale = 1.0f64.min(1.0 / load).min(f64::from(patience) / mass);
    for x in &mut g {
        *x *= scale;
    }
    star(&g, &p, patience)
}

/// `sum_{e' != e} g p`, computed from scratch.
pub fn competition(star: &StarProblem, i: usize) -> f64 {
    star.edges.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, s)| s.g * s.prob).sum()
}

pub fn stderr(mean: f64, trials: u64) -> f64 {
    (mean.clamp(0.0, 1.0) * (1.0 - mean.clamp(0.0, 1.0)) / trials as f64).sqrt()
}

/// `gamma_t`, `alpha_t` of the combined schedule for `R(x) = 1 - x/2`,
/// iterated here independently of the library.
pub fn recurrence(n: u32) -> (Vec<f64>, Vec<f64>) {
    let nf = f64::from(n);
    let (mut gamma, mut alpha) = (Vec::new(), Vec::new());
    let mut g = 1.0;
    for _ in 0..n {
        let a = 1.0 - g / 2.0;
        gamma.push(g);
        alpha.push(a);
        g *= 1.0 - a / nf;
    }
    (gamma, alpha)
}

/// Collects failed checks so a criterion can report all of them at once.
#[derive(Default)]
pub struct Checks {
    pub total: usize,
    pub failures: Vec<String>,
}

impl Checks {
    pub fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.total += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.failures.is_empty() {
            format!("{} checks", self.total)
        } else {
            let shown: Vec<&str> = self.failures.iter().take(5).map(String::as_str).collect();
            format!("{}/{} checks failed: {}", self.failures.len(), self.total, shown.join(" | "))
        }
    }
}
