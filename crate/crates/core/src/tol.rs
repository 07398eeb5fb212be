//! Numerical thresholds shared by every stage of the pipeline.
//!
//! Exact-arithmetic statements such as "the residual is zero" or "the entry is
//! nonzero" become threshold tests under floating point. All of them live here
//! so a run can be reproduced from a single value.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Absolute infinity-norm bound on `A θ - p` after a power-flow solve.
    pub solve: f64,
    /// Support threshold relative to the infinity norm of the vector.
    pub support_rel: f64,
    /// Absolute floor under the relative support threshold.
    pub support_abs: f64,
    /// Feasibility and reduced-cost tolerance of the simplex solver.
    pub lp: f64,
    /// Relative residual above which the area-refinement system is declared infeasible.
    pub feasibility: f64,
    /// Support threshold for the LP's line variables, relative to `max(1, |x|_inf)`.
    pub failure_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            solve: 1e-8,
            support_rel: 1e-6,
            support_abs: 1e-8,
            lp: 1e-7,
            feasibility: 1e-6,
            failure_rel: 1e-6,
        }
    }
}

impl Tolerances {
    /// Effective absolute threshold for `support` on `v`.
    pub fn support_threshold(&self, v: &[f64]) -> f64 {
        let inf = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        (self.support_rel * inf).max(self.support_abs)
    }

    /// Effective absolute threshold for the support of the LP's line vector.
    pub fn failure_threshold(&self, x: &[f64]) -> f64 {
        let inf = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        self.failure_rel * inf.max(1.0)
    }
}
