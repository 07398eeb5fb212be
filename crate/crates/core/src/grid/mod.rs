//! Grid data model: buses, reactive lines and their injections.
//!
//! Nodes and lines carry user-facing integer ids; everything inside the crate
//! works with dense indices into [`Grid::node_ids`] and [`Grid::lines`].
//! Line orientation is fixed from the lower node id to the higher one so the
//! incidence matrix and the sign of line flows are reproducible.

mod flow;
mod matching;
mod nodeset;
mod topology;

pub use flow::{
    admittance, admittance_without, incidence, line_flows, net_outflow, solve_dc_power_flow,
    submatrix, FlowError,
};
pub use matching::{has_covering_matching, max_bipartite_matching};
pub use nodeset::NodeSet;
pub use topology::{
    boundary, closure, connected_components, induced_lines, interior, is_connected, neighbors,
    support, support_rel,
};

use std::collections::HashMap;
use thiserror::Error;

pub type NodeId = u64;
pub type LineId = u64;

/// A purely reactive transmission line. `from` holds the endpoint with the
/// smaller node id.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: LineId,
    pub from: usize,
    pub to: usize,
    pub reactance: f64,
}

impl Line {
    pub fn other(&self, node: usize) -> usize {
        if node == self.from {
            self.to
        } else {
            self.from
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid has no nodes")]
    Empty,
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate line id {0}")]
    DuplicateLine(LineId),
    #[error("line {line} references unknown node {node}")]
    UnknownNode { line: LineId, node: NodeId },
    #[error("reference node {0} is not part of the grid")]
    UnknownReference(NodeId),
    #[error("line {0} is a self-loop")]
    SelfLoop(LineId),
    #[error("line {line} has non-positive or non-finite reactance {reactance}")]
    BadReactance { line: LineId, reactance: f64 },
    #[error("node {0} has a non-finite injection")]
    BadInjection(NodeId),
    #[error("grid is not connected")]
    Disconnected,
    #[error("injections do not sum to zero (imbalance {0:e})")]
    Unbalanced(f64),
    #[error("unknown line id {0}")]
    UnknownLine(LineId),
}

/// Immutable power grid. Construction validates every invariant the solvers
/// rely on: positive reactances, no self-loops, connectivity and balanced
/// injections. Parallel lines are kept as separate records.
#[derive(Debug, Clone)]
pub struct Grid {
    node_ids: Vec<NodeId>,
    injections: Vec<f64>,
    lines: Vec<Line>,
    reference: usize,
    node_lookup: HashMap<NodeId, usize>,
    line_lookup: HashMap<LineId, usize>,
    // (neighbor index, line index) per node
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Grid {
    /// `nodes` are `(id, injection)`, `lines` are `(id, u, v, reactance)`.
    pub fn new(
        nodes: Vec<(NodeId, f64)>,
        lines: Vec<(LineId, NodeId, NodeId, f64)>,
        reference: NodeId,
    ) -> Result<Self, GridError> {
        if nodes.is_empty() {
            return Err(GridError::Empty);
        }
        let mut node_lookup = HashMap::with_capacity(nodes.len());
        let mut node_ids = Vec::with_capacity(nodes.len());
        let mut injections = Vec::with_capacity(nodes.len());
        for (i, &(id, p)) in nodes.iter().enumerate() {
            if node_lookup.insert(id, i).is_some() {
                return Err(GridError::DuplicateNode(id));
            }
            if !p.is_finite() {
                return Err(GridError::BadInjection(id));
            }
            node_ids.push(id);
            injections.push(p);
        }
        let reference = *node_lookup
            .get(&reference)
            .ok_or(GridError::UnknownReference(reference))?;

        let mut line_lookup = HashMap::with_capacity(lines.len());
        let mut built = Vec::with_capacity(lines.len());
        for (k, &(id, u, v, x)) in lines.iter().enumerate() {
            if line_lookup.insert(id, k).is_some() {
                return Err(GridError::DuplicateLine(id));
            }
            let iu = *node_lookup
                .get(&u)
                .ok_or(GridError::UnknownNode { line: id, node: u })?;
            let iv = *node_lookup
                .get(&v)
                .ok_or(GridError::UnknownNode { line: id, node: v })?;
            if iu == iv {
                return Err(GridError::SelfLoop(id));
            }
            if !(x.is_finite() && x > 0.0) {
                return Err(GridError::BadReactance { line: id, reactance: x });
            }
            let (from, to) = if u < v { (iu, iv) } else { (iv, iu) };
            built.push(Line { id, from, to, reactance: x });
        }

        let grid = Self::assemble(node_ids, injections, built, reference, node_lookup, line_lookup);
        if !is_connected(&grid, &NodeSet::full(grid.node_count())) {
            return Err(GridError::Disconnected);
        }
        let imbalance: f64 = grid.injections.iter().sum();
        let scale: f64 = grid.injections.iter().map(|p| p.abs()).sum::<f64>().max(1.0);
        if imbalance.abs() > 1e-8 * scale {
            return Err(GridError::Unbalanced(imbalance));
        }
        Ok(grid)
    }

    fn assemble(
        node_ids: Vec<NodeId>,
        injections: Vec<f64>,
        lines: Vec<Line>,
        reference: usize,
        node_lookup: HashMap<NodeId, usize>,
        line_lookup: HashMap<LineId, usize>,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); node_ids.len()];
        for (k, line) in lines.iter().enumerate() {
            adjacency[line.from].push((line.to, k));
            adjacency[line.to].push((line.from, k));
        }
        Self {
            node_ids,
            injections,
            lines,
            reference,
            node_lookup,
            line_lookup,
            adjacency,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.node_ids
    }

    pub fn node_id(&self, index: usize) -> NodeId {
        self.node_ids[index]
    }

    pub fn node_index(&self, id: NodeId) -> Option<usize> {
        self.node_lookup.get(&id).copied()
    }

    pub fn line_index(&self, id: LineId) -> Option<usize> {
        self.line_lookup.get(&id).copied()
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn line(&self, index: usize) -> &Line {
        &self.lines[index]
    }

    pub fn injections(&self) -> &[f64] {
        &self.injections
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    /// `(neighbor, line)` pairs incident to `node`; parallel lines repeat the neighbor.
    pub fn incident(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    /// Distinct neighbors of `node`.
    pub fn node_neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let adj = &self.adjacency[node];
        adj.iter()
            .enumerate()
            .filter(move |(i, (n, _))| adj[..*i].iter().all(|(m, _)| m != n))
            .map(|(_, (n, _))| *n)
    }

    /// Map node ids to indices, failing on the first unknown id.
    pub fn indices_of(&self, ids: &[NodeId]) -> Result<NodeSet, NodeId> {
        ids.iter()
            .map(|id| self.node_index(*id).ok_or(*id))
            .collect::<Result<Vec<_>, _>>()
            .map(NodeSet::from_iter)
    }

    pub fn ids_of(&self, set: &NodeSet) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = set.iter().map(|i| self.node_ids[i]).collect();
        ids.sort_unstable();
        ids
    }

    pub fn line_ids_of(&self, lines: &[usize]) -> Vec<LineId> {
        let mut ids: Vec<LineId> = lines.iter().map(|&k| self.lines[k].id).collect();
        ids.sort_unstable();
        ids
    }

    pub fn line_indices_of(&self, ids: &[LineId]) -> Result<Vec<usize>, GridError> {
        let mut out = ids
            .iter()
            .map(|id| self.line_index(*id).ok_or(GridError::UnknownLine(*id)))
            .collect::<Result<Vec<_>, _>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Same topology with a different injection vector. The vector must still
    /// be balanced.
    pub fn with_injections(&self, p: &[f64]) -> Result<Self, GridError> {
        assert_eq!(p.len(), self.node_count(), "injection vector length");
        let imbalance: f64 = p.iter().sum();
        let scale: f64 = p.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        if imbalance.abs() > 1e-8 * scale {
            return Err(GridError::Unbalanced(imbalance));
        }
        let mut g = self.clone();
        g.injections = p.to_vec();
        Ok(g)
    }

    /// The grid without the lines at `removed` (line indices). Fails if the
    /// remaining graph is disconnected.
    pub fn without_lines(&self, removed: &[usize]) -> Result<Self, GridError> {
        let mut drop = vec![false; self.lines.len()];
        for &k in removed {
            drop[k] = true;
        }
        let lines: Vec<Line> = self
            .lines
            .iter()
            .zip(&drop)
            .filter(|(_, d)| !**d)
            .map(|(l, _)| l.clone())
            .collect();
        let line_lookup = lines.iter().enumerate().map(|(k, l)| (l.id, k)).collect();
        let g = Self::assemble(
            self.node_ids.clone(),
            self.injections.clone(),
            lines,
            self.reference,
            self.node_lookup.clone(),
            line_lookup,
        );
        if !is_connected(&g, &NodeSet::full(g.node_count())) {
            return Err(GridError::Disconnected);
        }
        Ok(g)
    }

    /// True when removing the given lines keeps the grid connected.
    pub fn stays_connected_without(&self, removed: &[usize]) -> bool {
        let n = self.node_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = n;
        for (k, line) in self.lines.iter().enumerate() {
            if removed.contains(&k) {
                continue;
            }
            let (a, b) = (find(&mut parent, line.from), find(&mut parent, line.to));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components == 1
    }
}
