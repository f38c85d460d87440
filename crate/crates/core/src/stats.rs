//! Small statistics helpers shared by the estimators and the harness.

/// Standard error of a Bernoulli mean over `trials` samples.
pub fn bernoulli_stderr(mean: f64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let m = mean.clamp(0.0, 1.0);
    (m * (1.0 - m) / trials as f64).sqrt()
}

/// Running mean and (population) variance.
///
/// Samples are folded in the order they are pushed, so reductions ordered by
/// trial id give bit-identical results across runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    count: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    /// Appends `other`'s samples after this one's.
    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Population variance; equals `m(1-m)` exactly for 0/1 samples.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        let m = self.mean();
        (self.sum_sq / self.count as f64 - m * m).max(0.0)
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}
