//! Synthetic grid and area generators used by tests, benches and the bundled
//! desk-scale case.

use crate::grid::{induced_lines, neighbors, Grid, NodeSet};
use rand::seq::IndexedRandom;
use rand::Rng;

/// Random connected grid on `n` nodes: a random spanning tree plus `extra`
/// additional lines between random distinct pairs. Reactances are uniform in
/// `[0.05, 0.5]`, injections uniform in `[-1, 1]` with their mean removed. Node ids
/// run `1..=n`, node 1 is the reference.
pub fn random_connected_grid<R: Rng + ?Sized>(n: usize, extra: usize, rng: &mut R) -> Grid {
    assert!(n >= 1);
    let mut lines = Vec::with_capacity(n - 1 + extra);
    let mut next_id = 0u64;
    for i in 1..n {
        let j = rng.random_range(0..i);
        lines.push((next_id, j as u64 + 1, i as u64 + 1, rng.random_range(0.05..0.5)));
        next_id += 1;
    }
    if n >= 2 {
        for _ in 0..extra {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            lines.push((next_id, a as u64 + 1, b as u64 + 1, rng.random_range(0.05..0.5)));
            next_id += 1;
        }
    }
    let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mean = p.iter().sum::<f64>() / n as f64;
    p.iter_mut().for_each(|v| *v -= mean);
    let nodes = p.into_iter().enumerate().map(|(i, v)| (i as u64 + 1, v)).collect();
    Grid::new(nodes, lines, 1).expect("generator produces a valid grid")
}

/// Geometric transmission-style grid: nodes scattered in the unit square, a
/// Euclidean spanning tree plus short local lines until the grid has
/// `lines_per_node * n` lines, reactance growing with line length. About three
/// quarters of the buses are loads, the rest are generators scaled to cover
/// the load.
pub fn geometric_grid<R: Rng + ?Sized>(n: usize, lines_per_node: f64, rng: &mut R) -> Grid {
    assert!(n >= 2);
    let pos: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
    let dist = |a: usize, b: usize| ((pos[a].0 - pos[b].0).powi(2) + (pos[a].1 - pos[b].1).powi(2)).sqrt();

    // Prim's algorithm on the complete Euclidean graph.
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, 0usize); n];
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(n * 2);
    in_tree[0] = true;
    for (j, b) in best.iter_mut().enumerate().skip(1) {
        *b = (dist(0, j), 0);
    }
    for _ in 1..n {
        let (next, _) = (0..n)
            .filter(|&j| !in_tree[j])
            .map(|j| (j, best[j].0))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        in_tree[next] = true;
        pairs.push((best[next].1, next));
        for j in 0..n {
            if !in_tree[j] {
                let d = dist(next, j);
                if d < best[j].0 {
                    best[j] = (d, next);
                }
            }
        }
    }

    let mut degree = vec![0usize; n];
    let mut adjacent = vec![vec![false; n]; n];
    for &(a, b) in &pairs {
        degree[a] += 1;
        degree[b] += 1;
        adjacent[a][b] = true;
        adjacent[b][a] = true;
    }
    let mut candidates: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .map(|(a, b)| (dist(a, b), a, b))
        .collect();
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0));
    let target = (lines_per_node * n as f64).round() as usize;
    for &(_, a, b) in &candidates {
        if pairs.len() >= target {
            break;
        }
        if adjacent[a][b] || degree[a] >= 5 || degree[b] >= 5 || rng.random::<f64>() < 0.35 {
            continue;
        }
        adjacent[a][b] = true;
        adjacent[b][a] = true;
        degree[a] += 1;
        degree[b] += 1;
        pairs.push((a, b));
    }

    let lines = pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let x = 0.01 + 0.4 * dist(a, b) * rng.random_range(0.7..1.3);
            (k as u64 + 1, a as u64 + 1, b as u64 + 1, x)
        })
        .collect();

    let mut p = vec![0.0; n];
    let mut generators = Vec::new();
    for v in p.iter_mut().enumerate() {
        if rng.random::<f64>() < 0.75 {
            *v.1 = -rng.random_range(0.2..1.5);
        } else {
            generators.push(v.0);
        }
    }
    if generators.is_empty() {
        generators.push(0);
    }
    let load: f64 = -p.iter().sum::<f64>();
    let shares: Vec<f64> = generators.iter().map(|_| rng.random_range(0.5..2.0)).collect();
    let total: f64 = shares.iter().sum();
    for (&g, s) in generators.iter().zip(&shares) {
        p[g] += load * s / total;
    }
    let residual: f64 = p.iter().sum();
    p[generators[0]] -= residual;

    let nodes = p.into_iter().enumerate().map(|(i, v)| (i as u64 + 1, v)).collect();
    Grid::new(nodes, lines, 1).expect("generator produces a valid grid")
}

/// Grow a connected area of `size` nodes from a random seed node by adding
/// random frontier nodes.
pub fn grow_area<R: Rng + ?Sized>(grid: &Grid, size: usize, rng: &mut R) -> NodeSet {
    let n = grid.node_count();
    let size = size.min(n);
    let start = rng.random_range(0..n);
    let mut area: NodeSet = [start].into_iter().collect();
    while area.len() < size {
        let frontier = neighbors(grid, &area).into_vec();
        match frontier.choose(rng) {
            Some(&next) => area = area.union(&[next].into_iter().collect()),
            None => break,
        }
    }
    area
}

/// Search for a connected area with exactly `nodes` nodes and `lines` induced
/// lines. Returns `None` after `attempts` failed growths.
pub fn find_area<R: Rng + ?Sized>(
    grid: &Grid,
    nodes: usize,
    lines: usize,
    attempts: usize,
    rng: &mut R,
) -> Option<NodeSet> {
    (0..attempts)
        .map(|_| grow_area(grid, nodes, rng))
        .find(|a| a.len() == nodes && induced_lines(grid, a).len() == lines)
}

/// An `m`-cycle (nodes `1..=m`, lines `0..m`) whose nodes each carry a spoke
/// to an outer `m`-cycle (nodes `m+1..=2m`). Returns the grid and the inner
/// cycle. Reactances are uniform in `[0.05, 0.5]`, injections nonzero and
/// balanced, the reference is an outer node.
pub fn spoked_cycle<R: Rng + ?Sized>(m: usize, rng: &mut R) -> (Grid, NodeSet) {
    assert!(m >= 3);
    let m64 = m as u64;
    let mut lines = Vec::with_capacity(3 * m);
    for i in 1..=m64 {
        lines.push((i - 1, i, i % m64 + 1, rng.random_range(0.05..0.5)));
    }
    for i in 1..=m64 {
        lines.push((m64 + i - 1, m64 + i, m64 + i % m64 + 1, rng.random_range(0.05..0.5)));
        lines.push((2 * m64 + i - 1, i, m64 + i, rng.random_range(0.05..0.5)));
    }
    let mut p: Vec<f64> = (0..2 * m)
        .map(|_| {
            let v: f64 = rng.random_range(0.2..1.0);
            if rng.random_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect();
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    p.iter_mut().for_each(|v| *v -= mean);
    let nodes = p.into_iter().enumerate().map(|(i, v)| (i as u64 + 1, v)).collect();
    let g = Grid::new(nodes, lines, m64 + 1).expect("generator produces a valid grid");
    (g, NodeSet::from_iter(0..m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_are_deterministic_and_valid() {
        let a = geometric_grid(60, 1.5, &mut ChaCha8Rng::seed_from_u64(3));
        let b = geometric_grid(60, 1.5, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a.lines(), b.lines());
        assert_eq!(a.line_count(), 90);
        let g = random_connected_grid(20, 5, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(g.line_count(), 24);
    }

    #[test]
    fn grown_areas_are_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = geometric_grid(80, 1.5, &mut rng);
        for _ in 0..20 {
            let area = grow_area(&g, 10, &mut rng);
            assert_eq!(area.len(), 10);
            assert!(crate::grid::is_connected(&g, &area));
        }
    }
}
