//! Admittance and incidence matrices and the DC power-flow solve.

use super::Grid;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("injections are not balanced (imbalance {0:e}); the Laplacian system is singular")]
    SingularSystem(f64),
    #[error("reduced Laplacian is not positive definite; grid is disconnected")]
    Disconnected,
    #[error("solve residual {residual:e} exceeds tolerance {tol:e}")]
    Residual { residual: f64, tol: f64 },
    #[error("injection vector has length {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
}

/// Weighted Laplacian with entries `-1/x` per line, parallel lines summed.
pub fn admittance(grid: &Grid) -> DMatrix<f64> {
    admittance_without(grid, &[])
}

/// Admittance of the grid with the lines at `removed` (line indices) taken out.
pub fn admittance_without(grid: &Grid, removed: &[usize]) -> DMatrix<f64> {
    let n = grid.node_count();
    let mut a = DMatrix::zeros(n, n);
    for (k, line) in grid.lines().iter().enumerate() {
        if removed.contains(&k) {
            continue;
        }
        let b = 1.0 / line.reactance;
        a[(line.from, line.from)] += b;
        a[(line.to, line.to)] += b;
        a[(line.from, line.to)] -= b;
        a[(line.to, line.from)] -= b;
    }
    a
}

/// Node-line incidence matrix: `+1` where the line leaves the node, `-1`
/// where it enters.
pub fn incidence(grid: &Grid) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(grid.node_count(), grid.line_count());
    for (k, line) in grid.lines().iter().enumerate() {
        d[(line.from, k)] = 1.0;
        d[(line.to, k)] = -1.0;
    }
    d
}

/// Rows `rows` and columns `cols` of `m`, in the given order.
pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Solve `A θ = p` with `θ[reference] = 0`.
///
/// The reference row and column are dropped, the reduced Laplacian is
/// factored by Cholesky and one round of iterative refinement is applied.
pub fn solve_dc_power_flow(grid: &Grid, p: &DVector<f64>) -> Result<DVector<f64>, FlowError> {
    solve_with_tolerance(grid, p, 1e-8)
}

pub(crate) fn solve_with_tolerance(
    grid: &Grid,
    p: &DVector<f64>,
    tol: f64,
) -> Result<DVector<f64>, FlowError> {
    let n = grid.node_count();
    if p.len() != n {
        return Err(FlowError::Dimension { got: p.len(), expected: n });
    }
    let imbalance = p.sum();
    if imbalance.abs() > tol * p.lp_norm(1).max(1.0) {
        return Err(FlowError::SingularSystem(imbalance));
    }
    let a = admittance(grid);
    let r = grid.reference();
    let keep: Vec<usize> = (0..n).filter(|&i| i != r).collect();
    let reduced = submatrix(&a, &keep, &keep);
    let chol = reduced.cholesky().ok_or(FlowError::Disconnected)?;

    let mut theta = DVector::zeros(n);
    let solve_into = |rhs: &DVector<f64>, theta: &mut DVector<f64>| {
        let rhs_r = DVector::from_fn(keep.len(), |i, _| rhs[keep[i]]);
        let sol = chol.solve(&rhs_r);
        for (i, &k) in keep.iter().enumerate() {
            theta[k] += sol[i];
        }
    };
    solve_into(p, &mut theta);
    let resid = p - &a * &theta;
    solve_into(&resid, &mut theta);

    let residual = (p - &a * &theta).amax();
    if residual >= tol {
        return Err(FlowError::Residual { residual, tol });
    }
    Ok(theta)
}

/// Flow on every line from its `from` end to its `to` end: `(θ_u - θ_v) / x`.
pub fn line_flows(grid: &Grid, theta: &DVector<f64>) -> Vec<f64> {
    grid.lines()
        .iter()
        .map(|l| (theta[l.from] - theta[l.to]) / l.reactance)
        .collect()
}

/// Net flow leaving each node for a given line-flow vector.
pub fn net_outflow(grid: &Grid, flows: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.node_count()];
    for (line, &f) in grid.lines().iter().zip(flows) {
        out[line.from] += f;
        out[line.to] -= f;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{cycle, path};
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn path_admittance_is_the_laplacian() {
        let g = path(&[0.0, 0.0, 0.0], 1);
        let a = admittance(&g);
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        assert_eq!(a, expected);
    }

    #[test]
    fn parallel_lines_aggregate() {
        let g = Grid::new(
            vec![(1, 0.0), (2, 0.0)],
            vec![(0, 1, 2, 2.0), (1, 1, 2, 2.0)],
            1,
        )
        .unwrap();
        let a = admittance(&g);
        assert_relative_eq!(a[(0, 1)], -1.0);
        assert_relative_eq!(a[(0, 0)], 1.0);
    }

    #[test]
    fn incidence_columns_have_one_source_and_one_sink() {
        let g = cycle(&[0.0; 5], 1);
        let d = incidence(&g);
        for col in d.column_iter() {
            assert_eq!(col.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(col.iter().filter(|&&v| v == -1.0).count(), 1);
        }
    }

    #[test]
    fn unit_flow_along_a_path() {
        let g = path(&[1.0, 0.0, 0.0, -1.0], 4);
        let p = DVector::from_column_slice(g.injections());
        let theta = solve_dc_power_flow(&g, &p).unwrap();
        for (t, e) in theta.iter().zip([3.0, 2.0, 1.0, 0.0]) {
            assert_relative_eq!(*t, e, epsilon = 1e-12);
        }
        for f in line_flows(&g, &theta) {
            assert_relative_eq!(f, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_injection_gives_zero_angles() {
        let g = cycle(&[0.0; 6], 3);
        let theta = solve_dc_power_flow(&g, &DVector::zeros(6)).unwrap();
        assert_eq!(theta.amax(), 0.0);
    }

    #[test]
    fn four_cycle_matches_pseudo_inverse() {
        let g = cycle(&[1.0, 0.0, -1.0, 0.0], 4);
        let p = DVector::from_column_slice(g.injections());
        let theta = solve_dc_power_flow(&g, &p).unwrap();
        // Independent route: minimum-norm least squares on the full singular
        // Laplacian, then shift so the reference is zero.
        let pinv = admittance(&g).pseudo_inverse(1e-12).unwrap();
        let mut oracle = pinv * &p;
        let shift = oracle[3];
        oracle.add_scalar_mut(-shift);
        for (a, b) in theta.iter().zip(oracle.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        // By symmetry the two branches each carry 1/2.
        assert_relative_eq!(theta[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(theta[2], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn unbalanced_injections_are_singular() {
        let g = path(&[0.0, 0.0], 1);
        let err = solve_dc_power_flow(&g, &DVector::from_vec(vec![1.0, 0.0])).unwrap_err();
        assert!(matches!(err, FlowError::SingularSystem(_)));
    }

    #[test]
    fn constant_shift_leaves_flows_unchanged() {
        let g = cycle(&[2.0, -1.0, 0.5, -1.5], 1);
        let p = DVector::from_column_slice(g.injections());
        let theta = solve_dc_power_flow(&g, &p).unwrap();
        let shifted = theta.add_scalar(3.25);
        for (a, b) in line_flows(&g, &theta).iter().zip(line_flows(&g, &shifted)) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
        assert!(line_flows(&g, &DVector::from_element(4, 7.0)).iter().all(|f| *f == 0.0));
    }
}
