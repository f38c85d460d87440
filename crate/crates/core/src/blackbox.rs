//! Offline probing strategies on a single star.
//!
//! A [`BlackBox`] turns a feasible star point `g` into a probing walk. The
//! online frameworks only see this trait plus the [`BlackBoxProfile`]
//! describing the guarantee the strategy offers.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::instance::{EdgeId, StarProblem};
use crate::rng::SimRng;
use crate::rounding::round_in_place;
use crate::stats::bernoulli_stderr;

/// Result of one walk over a star.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ProbeOutcome {
    /// Edges that were really probed, in order.
    pub probed: Vec<EdgeId>,
    /// The successful real probe, always the last entry of `probed`.
    pub matched: Option<EdgeId>,
    /// Attenuated probes `(edge, private success draw)`, in order.
    pub pretend: Vec<(EdgeId, bool)>,
}

impl ProbeOutcome {
    /// Probes and pretend probes together; bounded by the patience.
    pub fn events(&self) -> usize {
        self.probed.len() + self.pretend.len()
    }
}

/// Guarantee offered by a black box.
///
/// Every edge is probed with probability at least `g_e * ratio_fn(lambda(e))`
/// and at least `alpha * g_e`; with `satisfies_c` also at most `g_e`.
#[derive(Debug, Clone, Copy)]
pub struct BlackBoxProfile {
    pub alpha: f64,
    pub ratio_fn: fn(f64) -> f64,
    pub satisfies_c: bool,
}

impl BlackBoxProfile {
    pub fn ratio(&self, x: f64) -> f64 {
        (self.ratio_fn)(x)
    }

    /// Checks on a grid that the ratio function is non-increasing and convex
    /// on `[0,1]`, that `R(0) <= 1` and that `alpha <= R(1)`.
    pub fn is_consistent(&self) -> bool {
        const STEPS: usize = 1000;
        let r: Vec<f64> = (0..=STEPS).map(|i| self.ratio(i as f64 / STEPS as f64)).collect();
        let monotone = r.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        let convex = r.windows(3).all(|w| w[0] + w[2] - 2.0 * w[1] >= -1e-12);
        monotone && convex && r[0] <= 1.0 + 1e-12 && self.alpha <= r[STEPS] + 1e-12
    }
}

pub trait BlackBox: Send + Sync {
    /// One walk. `factors`, aligned with `star.edges`, turn a would-be probe
    /// of edge `i` into a pretend probe with probability `1 - factors[i]`.
    fn run(&self, star: &StarProblem, rng: &mut SimRng, factors: Option<&[f64]>) -> ProbeOutcome;

    fn profile(&self) -> BlackBoxProfile;

    fn name(&self) -> &'static str;
}

/// `BB_UR`: dependent rounding, then a uniformly random order over the
/// rounded edges, probing until the first success.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformRandom;

fn bb_ur_ratio(x: f64) -> f64 {
    1.0 - x / 2.0
}

/// Profile of [`UniformRandom`]: `alpha = 1/2`, `R(x) = 1 - x/2`.
pub fn bb_ur_profile() -> BlackBoxProfile {
    BlackBoxProfile { alpha: 0.5, ratio_fn: bb_ur_ratio, satisfies_c: true }
}

impl BlackBox for UniformRandom {
    fn run(&self, star: &StarProblem, rng: &mut SimRng, factors: Option<&[f64]>) -> ProbeOutcome {
        bb_ur_run(star, rng, factors)
    }

    fn profile(&self) -> BlackBoxProfile {
        bb_ur_profile()
    }

    fn name(&self) -> &'static str {
        "bb_ur"
    }
}

/// A pretend probe draws its own success coin and ends the walk on success
/// without matching, so the walk evolves exactly as if it were real and each
/// edge's probe probability scales by its factor.
pub fn bb_ur_run<R: Rng + ?Sized>(star: &StarProblem, rng: &mut R, factors: Option<&[f64]>) -> ProbeOutcome {
    if let Some(a) = factors {
        assert_eq!(a.len(), star.len(), "one factor per star edge");
        debug_assert!(a.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }
    let mut values: Vec<f64> = star.edges.iter().map(|s| s.g).collect();
    round_in_place(&mut values, rng);
    let mut order: Vec<usize> = (0..star.len()).filter(|&i| values[i] == 1.0).collect();
    order.shuffle(rng);

    let mut out = ProbeOutcome::default();
    let patience = star.patience as usize;
    for i in order {
        if out.events() >= patience {
            break;
        }
        let s = &star.edges[i];
        let real = match factors {
            Some(a) if a[i] < 1.0 => rng.gen::<f64>() < a[i],
            _ => true,
        };
        let success = rng.gen::<f64>() < s.prob;
        if real {
            out.probed.push(s.edge);
            if success {
                out.matched = Some(s.edge);
                break;
            }
        } else {
            out.pretend.push((s.edge, success));
            if success {
                break;
            }
        }
    }
    out
}

/// Empirical probe frequency of one star edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeEstimate {
    pub edge: EdgeId,
    pub mean: f64,
    pub stderr: f64,
}

/// Probe frequencies of every star edge over `trials` unattenuated walks.
pub fn estimate_probe_probs(
    bb: &dyn BlackBox,
    star: &StarProblem,
    trials: u64,
    rng: &mut SimRng,
) -> Vec<ProbeEstimate> {
    assert!(trials >= 1, "need at least one trial");
    let mut counts = vec![0u64; star.len()];
    for _ in 0..trials {
        for e in bb.run(star, rng, None).probed {
            counts[star.position(e).expect("probed edge belongs to the star")] += 1;
        }
    }
    star.edges
        .iter()
        .zip(counts)
        .map(|(s, c)| {
            let mean = c as f64 / trials as f64;
            ProbeEstimate { edge: s.edge, mean, stderr: bernoulli_stderr(mean, trials) }
        })
        .collect()
}
