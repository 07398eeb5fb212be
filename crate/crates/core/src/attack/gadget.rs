//! Complete bipartite grids encoding 3-partition instances.
//!
//! For `3k` sizes `s` with sum `kB` the grid is `K_{k,3k}` with unit
//! reactances. Each of the `k` supply nodes injects `B`, demand node `j`
//! draws `s_j`. The pre-attack angles are `0` on the supply side and
//! `-s_j / k` on demand node `j`; the claimed post-attack angles are `0` and
//! `-s_j`. A set of opened lines reproducing the claimed angles exists iff the
//! sizes split into `k` groups of sum `B`.

use super::AttackError;
use crate::grid::{Grid, NodeSet};
use nalgebra::DVector;

#[derive(Debug, Clone)]
pub struct Gadget {
    pub grid: Grid,
    pub theta: DVector<f64>,
    pub theta_post: DVector<f64>,
    /// Every node of the grid.
    pub area: NodeSet,
    pub k: usize,
}

impl Gadget {
    /// Index of supply node `i` (`0..k`).
    pub fn supply(&self, i: usize) -> usize {
        i
    }

    /// Index of demand node `j` (`0..3k`).
    pub fn demand(&self, j: usize) -> usize {
        self.k + j
    }

    /// Line index joining supply `i` and demand `j`.
    pub fn line(&self, i: usize, j: usize) -> usize {
        i * 3 * self.k + j
    }
}

/// Node ids are `1..=k` for supply and `k+1..=4k` for demand; line `i*3k + j`
/// joins supply `i` to demand `j`. The reference is supply node 1.
///
/// Only the counting conditions are enforced: `3k` positive sizes summing to
/// `kB`. The classical strict bounds `B/4 < s_j < B/2` make every group a
/// triple but are not needed for the equivalence.
pub fn gen_3partition_gadget(s: &[u64], b: u64) -> Result<Gadget, AttackError> {
    if s.is_empty() || !s.len().is_multiple_of(3) {
        return Err(AttackError::MalformedInstance(format!("{} sizes is not a positive multiple of 3", s.len())));
    }
    if b == 0 || s.contains(&0) {
        return Err(AttackError::MalformedInstance("sizes and bound must be positive".into()));
    }
    let k = s.len() / 3;
    let total: u64 = s.iter().sum();
    if total != k as u64 * b {
        return Err(AttackError::MalformedInstance(format!("sizes sum to {total}, expected {}", k as u64 * b)));
    }

    let mut nodes: Vec<(u64, f64)> = (0..k).map(|i| (i as u64 + 1, b as f64)).collect();
    nodes.extend(s.iter().enumerate().map(|(j, &v)| ((k + j) as u64 + 1, -(v as f64))));
    let mut lines = Vec::with_capacity(3 * k * k);
    for i in 0..k {
        for j in 0..3 * k {
            lines.push(((i * 3 * k + j) as u64, i as u64 + 1, (k + j) as u64 + 1, 1.0));
        }
    }
    let grid = Grid::new(nodes, lines, 1).map_err(|e| AttackError::MalformedInstance(e.to_string()))?;

    let kf = k as f64;
    let mut theta = DVector::zeros(4 * k);
    let mut theta_post = DVector::zeros(4 * k);
    for (j, &v) in s.iter().enumerate() {
        theta[k + j] = -(v as f64) / kf;
        theta_post[k + j] = -(v as f64);
    }
    Ok(Gadget { grid, theta, theta_post, area: NodeSet::full(4 * k), k })
}
