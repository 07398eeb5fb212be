//! Subgraph operators over node sets.

use super::{Grid, NodeSet};
use crate::tol::Tolerances;

/// `N(S)`: nodes outside `S` adjacent to some node of `S`.
pub fn neighbors(grid: &Grid, set: &NodeSet) -> NodeSet {
    let inside = set.mask(grid.node_count());
    set.iter()
        .flat_map(|i| grid.incident(i).iter().map(|&(j, _)| j))
        .filter(|&j| !inside[j])
        .collect()
}

/// `int(S)`: nodes of `S` whose neighbors all lie in `S`.
pub fn interior(grid: &Grid, set: &NodeSet) -> NodeSet {
    let inside = set.mask(grid.node_count());
    let v: Vec<usize> = set
        .iter()
        .filter(|&i| grid.incident(i).iter().all(|&(j, _)| inside[j]))
        .collect();
    NodeSet::from_sorted_unchecked(v)
}

/// `∂(S)`: nodes of `S` with at least one neighbor outside `S`.
pub fn boundary(grid: &Grid, set: &NodeSet) -> NodeSet {
    let inside = set.mask(grid.node_count());
    let v: Vec<usize> = set
        .iter()
        .filter(|&i| grid.incident(i).iter().any(|&(j, _)| !inside[j]))
        .collect();
    NodeSet::from_sorted_unchecked(v)
}

/// `cl(S) = S ∪ N(S)`.
pub fn closure(grid: &Grid, set: &NodeSet) -> NodeSet {
    set.union(&neighbors(grid, set))
}

/// Lines with both endpoints in `S`, in line order.
pub fn induced_lines(grid: &Grid, set: &NodeSet) -> Vec<usize> {
    let inside = set.mask(grid.node_count());
    grid.lines()
        .iter()
        .enumerate()
        .filter(|(_, l)| inside[l.from] && inside[l.to])
        .map(|(k, _)| k)
        .collect()
}

/// Connected components of the subgraph induced by `S`, ordered by their
/// smallest member.
pub fn connected_components(grid: &Grid, set: &NodeSet) -> Vec<NodeSet> {
    let n = grid.node_count();
    let inside = set.mask(n);
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in set.iter() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut comp = Vec::new();
        while let Some(i) = stack.pop() {
            comp.push(i);
            for &(j, _) in grid.incident(i) {
                if inside[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        out.push(comp.into_iter().collect::<NodeSet>());
    }
    out
}

/// True if the subgraph induced by `S` is connected (the empty set counts as connected).
pub fn is_connected(grid: &Grid, set: &NodeSet) -> bool {
    connected_components(grid, set).len() <= 1
}

/// Indices with `|v_i| > tol`.
pub fn support(v: &[f64], tol: f64) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| x.abs() > tol)
        .map(|(i, _)| i)
        .collect()
}

/// Support with the threshold scaled to `v` as configured in `tol`.
pub fn support_rel(v: &[f64], tol: &Tolerances) -> Vec<usize> {
    support(v, tol.support_threshold(v))
}
