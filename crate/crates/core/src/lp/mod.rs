//! Dense linear programming.
//!
//! [`solve_lp`] is a two-phase revised simplex over equality constraints with
//! nonnegative or free variables. [`FailureLp`] casts the weighted-L1
//! line-failure recovery problem into that form.

mod failure;
mod simplex;

pub use failure::{DecodedFailure, FailureLp, FailureLpError};
pub use simplex::{solve_lp, solve_lp_with, SimplexOptions};

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    NonNegative,
    Free,
}

/// `min cᵀx  s.t.  E x = b`, each variable either `x ≥ 0` or free.
#[derive(Debug, Clone)]
pub struct LpProblem {
    objective: Vec<f64>,
    constraints: DMatrix<f64>,
    rhs: Vec<f64>,
    bounds: Vec<Bound>,
}

impl LpProblem {
    pub fn new(
        objective: Vec<f64>,
        constraints: DMatrix<f64>,
        rhs: Vec<f64>,
        bounds: Vec<Bound>,
    ) -> Result<Self, LpError> {
        let (m, n) = constraints.shape();
        if objective.len() != n || bounds.len() != n || rhs.len() != m {
            return Err(LpError::Dimension);
        }
        let finite = objective.iter().chain(rhs.iter()).chain(constraints.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(LpError::NonFinite);
        }
        Ok(Self { objective, constraints, rhs, bounds })
    }

    /// All variables nonnegative.
    pub fn standard(objective: Vec<f64>, constraints: DMatrix<f64>, rhs: Vec<f64>) -> Result<Self, LpError> {
        let n = objective.len();
        Self::new(objective, constraints, rhs, vec![Bound::NonNegative; n])
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &DMatrix<f64> {
        &self.constraints
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    pub fn variable_count(&self) -> usize {
        self.objective.len()
    }

    pub fn constraint_count(&self) -> usize {
        self.rhs.len()
    }

    /// Infinity norm of `E x - b`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.constraints
            .row_iter()
            .zip(&self.rhs)
            .map(|(row, b)| (row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; meaningful only when `status` is `Optimal`.
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("LP dimensions are inconsistent")]
    Dimension,
    #[error("LP data contains non-finite entries")]
    NonFinite,
    #[error("simplex exceeded {0} pivots")]
    MaxIterations(usize),
    #[error("basis matrix became singular during refactorization")]
    SingularBasis,
}
