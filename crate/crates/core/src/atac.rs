//! Attacked-area containment and refinement.
//!
//! The suspicious set `S₀ = supp(Aθ* − p)` contains the attacked area after a
//! distortion attack. After a replay attack the area hides behind one of the
//! merged groups of components of `G ∖ S₀`, so every complement `G ∖ G_i` is
//! also a candidate. Each candidate is then shrunk to its interior and
//! refined through the linear system that the unperturbed outside must
//! satisfy.

use crate::grid::{
    boundary, connected_components, has_covering_matching, interior, neighbors, submatrix, support_rel, Grid,
    NodeSet,
};
use crate::Tolerances;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `supp(Aθ* − p)` with the relative support threshold.
pub fn compute_s0(admittance: &DMatrix<f64>, p: &DVector<f64>, theta_star: &DVector<f64>, tol: &Tolerances) -> NodeSet {
    let r = admittance * theta_star - p;
    support_rel(r.as_slice(), tol).into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "hypothesis", rename_all = "lowercase")]
pub enum CandidateOrigin {
    /// The suspicious set itself.
    Distortion,
    /// Everything except merged group `excluded` (0 = largest).
    Replay { excluded: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateArea {
    pub nodes: NodeSet,
    pub origin: CandidateOrigin,
    pub rank: usize,
}

/// Components of `G ∖ S₀` joined whenever two of them share a neighbor,
/// largest first (ties by smallest node).
pub fn merged_groups(grid: &Grid, s0: &NodeSet) -> Vec<NodeSet> {
    let n = grid.node_count();
    let comps = connected_components(grid, &s0.complement(n));
    let mut parent: Vec<usize> = (0..comps.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    // owner[v] = some component adjacent to suspicious node v
    let mut owner = vec![usize::MAX; n];
    for (c, comp) in comps.iter().enumerate() {
        for v in neighbors(grid, comp).iter() {
            if owner[v] == usize::MAX {
                owner[v] = c;
            } else {
                let (a, b) = (find(&mut parent, owner[v]), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); comps.len()];
    for (c, comp) in comps.iter().enumerate() {
        let r = find(&mut parent, c);
        groups[r].extend(comp.iter());
    }
    let mut out: Vec<NodeSet> = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(NodeSet::from_iter)
        .collect();
    out.sort_by(|a, b| b.len().cmp(&a.len()).then(a.first().cmp(&b.first())));
    out
}

/// `S₀` followed by `G ∖ G_i` for each merged group.
pub fn candidate_areas(grid: &Grid, s0: &NodeSet) -> Vec<CandidateArea> {
    let n = grid.node_count();
    let mut out = vec![CandidateArea { nodes: s0.clone(), origin: CandidateOrigin::Distortion, rank: 0 }];
    if s0.is_empty() {
        return out;
    }
    for (i, g) in merged_groups(grid, s0).into_iter().enumerate() {
        out.push(CandidateArea {
            nodes: g.complement(n),
            origin: CandidateOrigin::Replay { excluded: i },
            rank: i + 1,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedArea {
    /// `S_a`: interior of the candidate.
    pub interior: NodeSet,
    /// `S_b = supp(y − θ*_{S_a})`.
    pub nodes: NodeSet,
    /// Estimated post-attack angles on `S_a`, in node order.
    pub y: DVector<f64>,
    pub residual: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefineError {
    #[error("outside consistency system is infeasible (residual {residual:e} > {tol:e})")]
    Infeasible { residual: f64, tol: f64 },
}

/// Shrink `candidate` to its interior `S_a` and solve
/// `A_{S̄|S} δ = A_{S̄|S̄}(θ_S̄ − θ*_S̄)` for the minimum-norm `δ`, with
/// `y = θ_S + δ`. The system is consistent whenever `S_a` covers the attacked
/// area; a residual above `feasibility · (1 + ‖rhs‖)` rejects the candidate.
pub fn refine_area(
    grid: &Grid,
    admittance: &DMatrix<f64>,
    theta: &DVector<f64>,
    theta_star: &DVector<f64>,
    candidate: &NodeSet,
    tol: &Tolerances,
) -> Result<RefinedArea, RefineError> {
    let n = grid.node_count();
    let sa = interior(grid, candidate);
    if sa.is_empty() {
        return Ok(RefinedArea { interior: sa, nodes: NodeSet::empty(), y: DVector::zeros(0), residual: 0.0 });
    }
    let out = sa.complement(n);
    let s: Vec<usize> = sa.iter().collect();
    let o: Vec<usize> = out.iter().collect();

    let theta_s = DVector::from_iterator(s.len(), s.iter().map(|&i| theta[i]));
    let mut y = theta_s;
    let mut residual = 0.0;
    if !o.is_empty() {
        let m = submatrix(admittance, &o, &s);
        let diff = DVector::from_iterator(o.len(), o.iter().map(|&i| theta[i] - theta_star[i]));
        let rhs = submatrix(admittance, &o, &o) * diff;
        let delta = min_norm_solve(&m, &rhs);
        residual = (&m * &delta - &rhs).norm();
        let limit = tol.feasibility * (1.0 + rhs.norm());
        if residual > limit {
            return Err(RefineError::Infeasible { residual, tol: limit });
        }
        y += delta;
    }
    let gap: Vec<f64> = s.iter().enumerate().map(|(k, &i)| y[k] - theta_star[i]).collect();
    let nodes = support_rel(&gap, tol).into_iter().map(|k| s[k]).collect();
    Ok(RefinedArea { interior: sa, nodes, y, residual })
}

/// Minimum-norm least-squares solution of `m x = b`.
pub(crate) fn min_norm_solve(m: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if m.ncols() == 0 {
        return DVector::zeros(0);
    }
    if m.nrows() == 0 || m.amax() == 0.0 {
        return DVector::zeros(m.ncols());
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = 1e-10 * smax * (m.nrows().max(m.ncols()) as f64);
    svd.solve(b, eps).expect("both factors were computed")
}

/// Conditions under which refinement recovers `H` exactly: every node of `S`
/// outside `H` is on the boundary of `S`, and the boundary of `S` can be
/// matched into the outside.
pub fn check_exactness_conditions(grid: &Grid, s: &NodeSet, h: &NodeSet) -> bool {
    let bd = boundary(grid, s);
    s.difference(h).is_subset(&bd) && has_covering_matching(grid, &s.complement(grid.node_count()), &bd)
}
