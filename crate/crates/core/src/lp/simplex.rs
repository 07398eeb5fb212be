//! Two-phase revised simplex with an explicit dense basis inverse.
//!
//! Pricing is Dantzig's most-negative reduced cost. After `stall_limit`
//! consecutive pivots without objective progress the phase switches to
//! Bland's rule, which cannot cycle.

use super::{Bound, LpError, LpProblem, LpSolution, LpStatus};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Feasibility and reduced-cost tolerance.
    pub tol: f64,
    /// Smallest pivot magnitude accepted by the ratio test.
    pub pivot_tol: f64,
    pub stall_limit: usize,
    pub refactor_every: usize,
    /// Pivot limit; `None` means `50 * (rows + columns) + 1000`.
    pub max_iterations: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            pivot_tol: 1e-9,
            stall_limit: 30,
            refactor_every: 50,
            max_iterations: None,
        }
    }
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution, LpError> {
    solve_lp_with(problem, &SimplexOptions::default())
}

pub fn solve_lp_with(problem: &LpProblem, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
    let n = problem.variable_count();
    let infeasible = |iterations| LpSolution {
        status: LpStatus::Infeasible,
        x: vec![0.0; n],
        objective: f64::NAN,
        iterations,
    };

    // Column map: free variables become (x+, x-).
    let mut columns: Vec<(usize, f64)> = Vec::with_capacity(2 * n);
    for (j, b) in problem.bounds().iter().enumerate() {
        columns.push((j, 1.0));
        if *b == Bound::Free {
            columns.push((j, -1.0));
        }
    }
    let b_scale = problem.rhs().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let a_scale = problem.constraints().iter().fold(1.0_f64, |m, v| m.max(v.abs()));

    // Presolve: all-zero rows are either redundant or infeasible.
    let mut rows = Vec::new();
    for (i, row) in problem.constraints().row_iter().enumerate() {
        if row.iter().all(|v| *v == 0.0) {
            if problem.rhs()[i].abs() > opts.tol * b_scale {
                return Ok(infeasible(0));
            }
        } else {
            rows.push(i);
        }
    }

    let m = rows.len();
    let ns = columns.len();
    let mut a = DMatrix::zeros(m, ns);
    let mut b = DVector::zeros(m);
    for (r, &i) in rows.iter().enumerate() {
        let sign = if problem.rhs()[i] < 0.0 { -1.0 } else { 1.0 };
        b[r] = sign * problem.rhs()[i];
        for (c, &(j, s)) in columns.iter().enumerate() {
            a[(r, c)] = sign * s * problem.constraints()[(i, j)];
        }
    }
    let cost: Vec<f64> = columns.iter().map(|&(j, s)| s * problem.objective()[j]).collect();

    let max_iter = opts.max_iterations.unwrap_or(50 * (m + ns) + 1000);
    let mut tab = Revised::new(a, b, opts, max_iter);

    // Phase 1: minimise the sum of artificials.
    let phase1: Vec<f64> = (0..ns).map(|_| 0.0).chain((0..m).map(|_| 1.0)).collect();
    tab.run(&phase1, false)?;
    let infeas: f64 = (0..m)
        .filter(|&r| tab.basis[r] >= ns)
        .map(|r| tab.xb[r].max(0.0))
        .sum();
    if infeas > opts.tol * b_scale.max(a_scale) {
        return Ok(infeasible(tab.iterations));
    }
    tab.drive_out_artificials()?;

    // Phase 2.
    let phase2: Vec<f64> = cost.iter().copied().chain((0..m).map(|_| 0.0)).collect();
    if !tab.run(&phase2, true)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![0.0; n],
            objective: f64::NEG_INFINITY,
            iterations: tab.iterations,
        });
    }
    tab.refactor()?;

    let mut x = vec![0.0; n];
    for (r, &col) in tab.basis.iter().enumerate() {
        if col < ns {
            let (j, s) = columns[col];
            x[j] += s * tab.xb[r].max(0.0);
        }
    }
    let objective = problem.value(&x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        iterations: tab.iterations,
    })
}

struct Revised<'o> {
    a: DMatrix<f64>,
    b: DVector<f64>,
    structural: usize,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: DMatrix<f64>,
    xb: Vec<f64>,
    iterations: usize,
    max_iter: usize,
    since_refactor: usize,
    opts: &'o SimplexOptions,
}

impl<'o> Revised<'o> {
    fn new(a: DMatrix<f64>, b: DVector<f64>, opts: &'o SimplexOptions, max_iter: usize) -> Self {
        let (m, ns) = a.shape();
        let mut in_basis = vec![false; ns + m];
        in_basis[ns..].iter_mut().for_each(|v| *v = true);
        Self {
            xb: b.iter().copied().collect(),
            a,
            b,
            structural: ns,
            basis: (ns..ns + m).collect(),
            in_basis,
            binv: DMatrix::identity(m, m),
            iterations: 0,
            max_iter,
            since_refactor: 0,
            opts,
        }
    }

    fn rows(&self) -> usize {
        self.b.len()
    }

    fn column(&self, j: usize) -> DVector<f64> {
        if j < self.structural {
            self.a.column(j).into_owned()
        } else {
            let mut e = DVector::zeros(self.rows());
            e[j - self.structural] = 1.0;
            e
        }
    }

    /// `B⁻¹ a_j`
    fn ftran(&self, j: usize) -> DVector<f64> {
        if j < self.structural {
            &self.binv * self.a.column(j)
        } else {
            self.binv.column(j - self.structural).into_owned()
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.rows();
        if m == 0 {
            return Ok(());
        }
        let mut basis_matrix = DMatrix::zeros(m, m);
        for (r, &j) in self.basis.iter().enumerate() {
            basis_matrix.set_column(r, &self.column(j));
        }
        self.binv = basis_matrix.lu().try_inverse().ok_or(LpError::SingularBasis)?;
        let xb = &self.binv * &self.b;
        self.xb = xb.iter().map(|v| if v.abs() < 1e-13 { 0.0 } else { *v }).collect();
        self.since_refactor = 0;
        Ok(())
    }

    fn pivot(&mut self, row: usize, entering: usize, u: &DVector<f64>) -> Result<(), LpError> {
        let m = self.rows();
        let t = self.xb[row] / u[row];
        for i in 0..m {
            if i != row {
                self.xb[i] -= t * u[i];
                if self.xb[i] < 0.0 && self.xb[i] > -self.opts.tol {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[row] = t.max(0.0);
        let pivot_row = self.binv.row(row) / u[row];
        for i in 0..m {
            if i != row && u[i] != 0.0 {
                let f = u[i];
                for c in 0..m {
                    self.binv[(i, c)] -= f * pivot_row[c];
                }
            }
        }
        self.binv.set_row(row, &pivot_row);
        self.in_basis[self.basis[row]] = false;
        self.in_basis[entering] = true;
        self.basis[row] = entering;
        self.iterations += 1;
        self.since_refactor += 1;
        if self.since_refactor >= self.opts.refactor_every {
            self.refactor()?;
        }
        Ok(())
    }

    /// Iterate to optimality for `cost`. Returns `false` on an unbounded ray.
    /// Artificial columns never enter when `bar_artificials` is set.
    fn run(&mut self, cost: &[f64], bar_artificials: bool) -> Result<bool, LpError> {
        let m = self.rows();
        let total = self.structural + m;
        let mut bland = false;
        let mut stall = 0usize;
        let mut last_obj = f64::INFINITY;
        let cost_scale = cost.iter().fold(1.0_f64, |s, c| s.max(c.abs()));
        let dtol = self.opts.tol * cost_scale;

        loop {
            if self.iterations >= self.max_iter {
                return Err(LpError::MaxIterations(self.max_iter));
            }
            let cb = DVector::from_iterator(m, self.basis.iter().map(|&j| cost[j]));
            let y = self.binv.tr_mul(&cb);
            let obj: f64 = cb.iter().zip(&self.xb).map(|(c, x)| c * x).sum();
            if obj < last_obj - self.opts.tol * (1.0 + obj.abs()) {
                stall = 0;
                last_obj = obj;
            } else {
                stall += 1;
                if stall > self.opts.stall_limit {
                    bland = true;
                }
            }

            // Pricing.
            let limit = if bar_artificials { self.structural } else { total };
            let mut entering = None;
            let mut best = -dtol;
            for j in 0..limit {
                if self.in_basis[j] {
                    continue;
                }
                let d = if j < self.structural {
                    cost[j] - y.dot(&self.a.column(j))
                } else {
                    cost[j] - y[j - self.structural]
                };
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = entering else {
                return Ok(true);
            };

            // Ratio test.
            let u = self.ftran(q);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if u[i] <= self.opts.pivot_tol {
                    continue;
                }
                let ratio = self.xb[i].max(0.0) / u[i];
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                        let better = if tie {
                            if bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                u[i] > u[r]
                            }
                        } else {
                            ratio < best
                        };
                        if better {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return Ok(false);
            };
            self.pivot(row, q, &u)?;
        }
    }

    /// Replace artificials left in the basis at zero level by structural
    /// columns. Rows where no structural column has a usable entry are
    /// redundant; their artificial stays basic at zero.
    fn drive_out_artificials(&mut self) -> Result<(), LpError> {
        for row in 0..self.rows() {
            if self.basis[row] < self.structural {
                continue;
            }
            let binv_row = self.binv.row(row).into_owned();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.structural {
                if self.in_basis[j] {
                    continue;
                }
                let v = (binv_row.clone() * self.a.column(j))[0].abs();
                if v > 1e-7 && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((j, v));
                }
            }
            if let Some((j, _)) = best {
                let u = self.ftran(j);
                self.xb[row] = 0.0;
                self.pivot(row, j, &u)?;
            }
        }
        Ok(())
    }
}
