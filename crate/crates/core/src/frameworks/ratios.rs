//! Closed-form and numerical competitive ratios of the frameworks, plus their
//! finite-horizon forms used as statistical lower bounds.

use crate::calibration::Schedule;

/// Step of the fixed-step integrator for `h' = -h R(h)`.
pub const ODE_STEP: f64 = 1e-4;

const SIMPSON_INTERVALS: usize = 2000;

/// Edge attenuation with a black box of constant `alpha`: `1 - e^{-alpha}`.
pub fn ratio_attn1(alpha: f64) -> f64 {
    assert!((0.0..=1.0).contains(&alpha), "alpha = {alpha} outside [0,1]");
    1.0 - (-alpha).exp()
}

/// Vertex attenuation: `int_0^1 e^{-x} R(e^{-x}) dx` by composite Simpson.
pub fn ratio_attn2(ratio_fn: impl Fn(f64) -> f64) -> f64 {
    simpson(|x| (-x).exp() * ratio_fn((-x).exp()), 0.0, 1.0, SIMPSON_INTERVALS)
}

/// Edge and vertex attenuation: `1 - h(1)` where `h' = -h R(h)`, `h(0) = 1`.
pub fn ratio_attn3(ratio_fn: impl Fn(f64) -> f64) -> f64 {
    let h = decay_curve(ratio_fn, ODE_STEP);
    1.0 - h.last().copied().unwrap_or(1.0)
}

/// Edge attenuation under two-sided timeouts: `alpha e^{-alpha}`.
pub fn ratio_two_sided(alpha: f64) -> f64 {
    assert!((0.0..=1.0).contains(&alpha), "alpha = {alpha} outside [0,1]");
    alpha * (-alpha).exp()
}

/// Per-vertex match probability cap on the gap instance, `1 - (1 - 1/n)^n`.
pub fn lower_bound_check(n: u32) -> f64 {
    assert!(n >= 1);
    let n = f64::from(n);
    1.0 - (1.0 - 1.0 / n).powf(n)
}

/// Samples of `h` on `[0,1]` at spacing `step` (the last sample is `h(1)`),
/// integrated with the classical four-stage Runge-Kutta scheme.
pub fn decay_curve(ratio_fn: impl Fn(f64) -> f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && step <= 1.0);
    let steps = (1.0 / step).round() as usize;
    let dt = 1.0 / steps as f64;
    let slope = |h: f64| -h * ratio_fn(h);
    let mut h = 1.0;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(h);
    for _ in 0..steps {
        let k1 = slope(h);
        let k2 = slope(h + 0.5 * dt * k1);
        let k3 = slope(h + 0.5 * dt * k2);
        let k4 = slope(h + dt * k3);
        h += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push(h);
    }
    out
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let m = intervals + intervals % 2;
    let h = (b - a) / m as f64;
    let inner: f64 = (1..m)
        .map(|i| {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            w * f(a + i as f64 * h)
        })
        .sum();
    h / 3.0 * (f(a) + inner + f(b))
}

/// Finite-horizon edge attenuation bound, `1 - (1 - alpha/n)^n`.
pub fn attn1_finite(alpha: f64, n: u32) -> f64 {
    let n = f64::from(n);
    1.0 - (1.0 - alpha / n).powf(n)
}

/// Finite-horizon vertex attenuation bound,
/// `sum_t (1/n) (1-1/n)^{t-1} R((1-1/n)^{t-1})`.
pub fn attn2_finite(ratio_fn: impl Fn(f64) -> f64, n: u32) -> f64 {
    let nf = f64::from(n);
    (0..n)
        .map(|k| {
            let gamma = (1.0 - 1.0 / nf).powi(k as i32);
            gamma * ratio_fn(gamma) / nf
        })
        .sum()
}

/// Finite-horizon combined bound, `sum_t gamma_t alpha_t / n`.
pub fn attn3_finite(schedule: &Schedule) -> f64 {
    let n = schedule.gamma.len() as f64;
    schedule.gamma.iter().zip(&schedule.alpha).map(|(g, a)| g * a / n).sum()
}

/// Finite-horizon two-sided bound,
/// `sum_t (alpha/n) (1 - alpha/n)^{t-1} (1 - alpha (t-1)/n)`.
pub fn two_sided_finite(alpha: f64, n: u32) -> f64 {
    let nf = f64::from(n);
    (0..n)
        .map(|k| {
            let k = f64::from(k);
            alpha / nf * (1.0 - alpha / nf).powf(k) * (1.0 - alpha * k / nf)
        })
        .sum()
}
