//! Dependent rounding on a star.
//!
//! The two lowest-indexed fractional values are repeatedly combined by the
//! randomized two-choice step: with values `x, y`, let `a = min(1-x, y)` and
//! `b = min(x, 1-y)`; move to `(x+a, y-a)` with probability `b/(a+b)`, else to
//! `(x-b, y+b)`. Each step keeps both expectations and the sum unchanged and
//! makes at least one value integral. A single leftover fractional value is
//! settled by an independent coin. The result keeps every marginal, keeps the
//! count of chosen edges at `floor` or `ceil` of the total mass, and chosen
//! indicators are negatively correlated.

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::instance::{EdgeId, StarProblem};

/// Values this close to 0 or 1 are treated as integral.
pub const SNAP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundedStar {
    /// Edges rounded to 1, in star order.
    pub chosen: Vec<EdgeId>,
}

/// Rounds a feasible star.
pub fn round_star<R: Rng + ?Sized>(star: &StarProblem, rng: &mut R) -> Result<RoundedStar> {
    star.check_feasible()?;
    let mut values: Vec<f64> = star.edges.iter().map(|s| s.g).collect();
    round_in_place(&mut values, rng);
    let chosen = star
        .edges
        .iter()
        .zip(&values)
        .filter(|(_, &x)| x == 1.0)
        .map(|(s, _)| s.edge)
        .collect();
    Ok(RoundedStar { chosen })
}

pub(crate) fn snap(x: f64) -> f64 {
    if x < SNAP {
        0.0
    } else if x > 1.0 - SNAP {
        1.0
    } else {
        x
    }
}

pub(crate) fn is_fractional(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

/// The two outcomes of one pairing step as `(probability, x', y')`.
pub(crate) fn pair_step(x: f64, y: f64) -> [(f64, f64, f64); 2] {
    let up = (1.0 - x).min(y);
    let down = x.min(1.0 - y);
    let total = up + down;
    [
        (down / total, snap(x + up), snap(y - up)),
        (up / total, snap(x - down), snap(y + down)),
    ]
}

/// Rounds `values` (each in `[0,1]`) to 0/1 in place.
pub(crate) fn round_in_place<R: Rng + ?Sized>(values: &mut [f64], rng: &mut R) {
    for x in values.iter_mut() {
        *x = snap(*x);
    }
    let mut carry: Option<usize> = None;
    for j in 0..values.len() {
        if !is_fractional(values[j]) {
            continue;
        }
        let Some(i) = carry else {
            carry = Some(j);
            continue;
        };
        let [(p_first, x1, y1), (_, x2, y2)] = pair_step(values[i], values[j]);
        let (x, y) = if rng.gen::<f64>() < p_first { (x1, y1) } else { (x2, y2) };
        values[i] = x;
        values[j] = y;
        carry = if is_fractional(x) {
            Some(i)
        } else if is_fractional(y) {
            Some(j)
        } else {
            None
        };
    }
    if let Some(i) = carry {
        values[i] = if rng.gen::<f64>() < values[i] { 1.0 } else { 0.0 };
    }
}
