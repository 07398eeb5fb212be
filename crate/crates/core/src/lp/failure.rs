//! Weighted-L1 line-failure recovery inside a candidate area `S`.
//!
//! Unknowns are the flow changes `x` on the lines of `E_S` and the
//! post-failure angles `y` on `S`. With `Δ = θ_S̄ − θ*_S̄` the constraints are
//!
//! ```text
//! A_{S|S}(θ_S − y) + A_{S|S̄} Δ = D_S x
//! A_{S̄|S}(θ_S − y) + A_{S̄|S̄} Δ = 0
//! ```
//!
//! and the objective is `Σ w_e |x_e|`. Variables are laid out as
//! `[x⁺, x⁻, y]` with `y` free.

use super::{Bound, LpProblem, LpSolution};
use crate::grid::{induced_lines, Grid, NodeSet};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FailureLpError {
    #[error("candidate area is empty")]
    EmptyArea,
    #[error("expected {expected} weights, got {got}")]
    WeightCount { got: usize, expected: usize },
    #[error("weights must be positive and finite")]
    BadWeight,
    #[error("state vector has length {got}, grid has {expected} nodes")]
    StateLength { got: usize, expected: usize },
}

#[derive(Debug, Clone)]
pub struct FailureLp {
    problem: LpProblem,
    area: NodeSet,
    lines: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DecodedFailure {
    /// Flow change per line of `E_S`, aligned with [`FailureLp::lines`].
    pub x: Vec<f64>,
    /// Recovered angles on `S`, aligned with the area's node order.
    pub y: DVector<f64>,
    /// Largest `min(x⁺, x⁻)` over the split pairs; zero at a vertex.
    pub split_overlap: f64,
}

impl FailureLp {
    /// `admittance` must be the admittance of `grid`. Only the `S̄` entries
    /// of `theta_star` are read.
    pub fn build(
        grid: &Grid,
        admittance: &DMatrix<f64>,
        area: &NodeSet,
        theta: &DVector<f64>,
        theta_star: &DVector<f64>,
        weights: &[f64],
    ) -> Result<Self, FailureLpError> {
        let n = grid.node_count();
        if area.is_empty() {
            return Err(FailureLpError::EmptyArea);
        }
        for v in [theta, theta_star] {
            if v.len() != n {
                return Err(FailureLpError::StateLength { got: v.len(), expected: n });
            }
        }
        let lines = induced_lines(grid, area);
        if weights.len() != lines.len() {
            return Err(FailureLpError::WeightCount { got: weights.len(), expected: lines.len() });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(FailureLpError::BadWeight);
        }

        let s: Vec<usize> = area.iter().collect();
        let outside = area.complement(n);
        let ne = lines.len();
        let ns = s.len();
        let cols = 2 * ne + ns;

        // Row i of the system is node i's balance; rows follow grid node order.
        let mut e = DMatrix::zeros(n, cols);
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            // A_{i|S} y
            for (k, &j) in s.iter().enumerate() {
                e[(i, 2 * ne + k)] = admittance[(i, j)];
            }
            // A_{i|S} θ_S + A_{i|S̄} Δ
            let mut b = 0.0;
            for &j in &s {
                b += admittance[(i, j)] * theta[j];
            }
            for j in outside.iter() {
                b += admittance[(i, j)] * (theta[j] - theta_star[j]);
            }
            rhs[i] = b;
        }
        // + D_S x on the rows of S
        for (k, &l) in lines.iter().enumerate() {
            let line = grid.line(l);
            e[(line.from, k)] += 1.0;
            e[(line.to, k)] -= 1.0;
            e[(line.from, ne + k)] -= 1.0;
            e[(line.to, ne + k)] += 1.0;
        }

        let mut objective = Vec::with_capacity(cols);
        objective.extend_from_slice(weights);
        objective.extend_from_slice(weights);
        objective.extend(std::iter::repeat_n(0.0, ns));
        let mut bounds = vec![Bound::NonNegative; 2 * ne];
        bounds.extend(std::iter::repeat_n(Bound::Free, ns));

        let problem = LpProblem::new(objective, e, rhs, bounds).expect("dimensions are consistent by construction");
        Ok(Self { problem, area: area.clone(), lines })
    }

    pub fn problem(&self) -> &LpProblem {
        &self.problem
    }

    pub fn area(&self) -> &NodeSet {
        &self.area
    }

    /// Line indices of `E_S`.
    pub fn lines(&self) -> &[usize] {
        &self.lines
    }

    pub fn decode(&self, solution: &LpSolution) -> DecodedFailure {
        let ne = self.lines.len();
        let v = &solution.x;
        let x = (0..ne).map(|k| v[k] - v[ne + k]).collect();
        let split_overlap = (0..ne).map(|k| v[k].min(v[ne + k])).fold(0.0, f64::max);
        let y = DVector::from_iterator(self.area.len(), v[2 * ne..].iter().copied());
        DecodedFailure { x, y, split_overlap }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{admittance, fixtures::cycle, solve_dc_power_flow};
    use crate::lp::{solve_lp, LpStatus};

    fn setup(p: &[f64]) -> (Grid, DMatrix<f64>, DVector<f64>) {
        let g = cycle(p, 1);
        let a = admittance(&g);
        let theta = solve_dc_power_flow(&g, &DVector::from_column_slice(p)).unwrap();
        (g, a, theta)
    }

    #[test]
    fn empty_area_is_rejected() {
        let (g, a, th) = setup(&[1.0, 0.0, -1.0, 0.0]);
        let err = FailureLp::build(&g, &a, &NodeSet::empty(), &th, &th, &[]).unwrap_err();
        assert_eq!(err, FailureLpError::EmptyArea);
    }

    #[test]
    fn weight_count_must_match_lines() {
        let (g, a, th) = setup(&[1.0, 0.0, -1.0, 0.0]);
        let err = FailureLp::build(&g, &a, &NodeSet::full(4), &th, &th, &[1.0]).unwrap_err();
        assert_eq!(err, FailureLpError::WeightCount { got: 1, expected: 4 });
    }

    #[test]
    fn null_attack_recovers_nothing() {
        let (g, a, th) = setup(&[1.0, 0.0, -1.0, 0.0]);
        let s: NodeSet = [1, 2].into_iter().collect();
        let lp = FailureLp::build(&g, &a, &s, &th, &th, &[1.0]).unwrap();
        let sol = solve_lp(lp.problem()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let d = lp.decode(&sol);
        assert!(sol.objective.abs() < 1e-9);
        assert!(d.x.iter().all(|v| v.abs() < 1e-9));
        assert!((d.y[0] - th[1]).abs() < 1e-9 && (d.y[1] - th[2]).abs() < 1e-9);
    }

    #[test]
    fn identity_objective_is_l1_norm() {
        let (g, a, th) = setup(&[1.0, 0.5, -1.0, -0.5]);
        let post = g.without_lines(&[0]).ok();
        // cutting one cycle line keeps a path, so the post state exists
        let post = post.unwrap();
        let th2 = solve_dc_power_flow(&post, &DVector::from_column_slice(g.injections())).unwrap();
        let s = NodeSet::full(4);
        let lp = FailureLp::build(&g, &a, &s, &th, &th2, &[1.0; 4]).unwrap();
        let sol = solve_lp(lp.problem()).unwrap();
        let d = lp.decode(&sol);
        let l1: f64 = d.x.iter().map(|v| v.abs()).sum();
        assert!((sol.objective - l1).abs() < 1e-9);
        assert!(d.split_overlap < 1e-9);
        assert!(lp.problem().residual(&sol.x) < 1e-7);
    }
}
