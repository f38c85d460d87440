//! Dense primal simplex for `max c.x  s.t.  A x <= b, x >= 0` with `b >= 0`.
//!
//! The slack basis is feasible because `b >= 0`, so no phase one is needed.
//! Pivoting follows Bland's rule (lowest entering index, lowest leaving basis
//! index on ratio ties), which guarantees termination on degenerate problems.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DenseLp {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimplexSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Dual values of the `<=` rows.
    pub duals: Vec<f64>,
    pub dual_objective: f64,
    pub pivots: usize,
}

impl DenseLp {
    pub fn new(vars: usize) -> Self {
        Self { objective: vec![0.0; vars], rows: Vec::new(), rhs: Vec::new() }
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coefficients: Vec<f64>, rhs: f64) {
        debug_assert_eq!(coefficients.len(), self.vars());
        self.rows.push(coefficients);
        self.rhs.push(rhs);
    }

    pub fn solve(&self) -> Result<SimplexSolution> {
        let m = self.rows.len();
        let nv = self.vars();
        if self.rhs.iter().any(|&b| b < 0.0 || !b.is_finite()) {
            // Slack basis would be infeasible; the benchmark LP never needs this.
            return Err(Error::Infeasible);
        }
        let width = nv + m + 1;
        let rhs_col = nv + m;
        // Rows 0..m are constraints, row m holds the reduced costs and -objective.
        let mut t = vec![0.0; (m + 1) * width];
        for (i, row) in self.rows.iter().enumerate() {
            t[i * width..i * width + nv].copy_from_slice(row);
            t[i * width + nv + i] = 1.0;
            t[i * width + rhs_col] = self.rhs[i];
        }
        t[m * width..m * width + nv].copy_from_slice(&self.objective);
        let mut basis: Vec<usize> = (nv..nv + m).collect();

        let mut pivots = 0;
        loop {
            let cost = &t[m * width..m * width + nv + m];
            let Some(enter) = cost.iter().position(|&c| c > COST_TOL) else {
                break;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = t[i * width + enter];
                if a > PIVOT_TOL {
                    let ratio = t[i * width + rhs_col] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((j, best)) => {
                            let tie = (ratio - best).abs() <= 1e-12 * best.abs().max(1.0);
                            if ratio < best && !tie || tie && basis[i] < basis[j] {
                                Some((i, ratio))
                            } else {
                                Some((j, best))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Err(Error::Unbounded { column: enter });
            };
            pivot(&mut t, width, m, row, enter);
            basis[row] = enter;
            pivots += 1;
        }

        let mut x = vec![0.0; nv];
        for (i, &b) in basis.iter().enumerate() {
            if b < nv {
                x[b] = t[i * width + rhs_col].max(0.0);
            }
        }
        let objective = self.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
        let duals: Vec<f64> = (0..m).map(|i| (-t[m * width + nv + i]).max(0.0)).collect();
        let dual_objective = duals.iter().zip(&self.rhs).map(|(y, b)| y * b).sum();
        Ok(SimplexSolution { x, objective, duals, dual_objective, pivots })
    }
}

fn pivot(t: &mut [f64], width: usize, m: usize, row: usize, col: usize) {
    let p = t[row * width + col];
    for j in 0..width {
        t[row * width + j] /= p;
    }
    t[row * width + col] = 1.0;
    let (before, rest) = t.split_at_mut(row * width);
    let (prow, after) = rest.split_at_mut(width);
    let eliminate = |r: &mut [f64]| {
        let factor = r[col];
        if factor != 0.0 {
            for (a, &b) in r.iter_mut().zip(prow.iter()) {
                *a -= factor * b;
            }
            r[col] = 0.0;
        }
    };
    for r in before.chunks_exact_mut(width) {
        eliminate(r);
    }
    for r in after.chunks_exact_mut(width).take(m + 1 - row - 1) {
        eliminate(r);
    }
}
