//! Hopcroft-Karp maximum bipartite matching.

use super::{Grid, NodeSet};
use std::collections::VecDeque;

const NIL: usize = usize::MAX;

/// Size of a maximum matching. `adj[l]` lists the right vertices adjacent to
/// left vertex `l`, right vertices are `0..n_right`.
pub fn max_bipartite_matching(n_right: usize, adj: &[Vec<usize>]) -> usize {
    let n_left = adj.len();
    let mut match_l = vec![NIL; n_left];
    let mut match_r = vec![NIL; n_right];
    let mut dist = vec![0usize; n_left];
    let mut size = 0;

    loop {
        // BFS layering from free left vertices.
        let mut queue = VecDeque::new();
        for l in 0..n_left {
            if match_l[l] == NIL {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                let m = match_r[r];
                if m == NIL {
                    found = true;
                } else if dist[m] == usize::MAX {
                    dist[m] = dist[l] + 1;
                    queue.push_back(m);
                }
            }
        }
        if !found {
            break;
        }
        for l in 0..n_left {
            if match_l[l] == NIL && augment(l, adj, &mut match_l, &mut match_r, &mut dist) {
                size += 1;
            }
        }
    }
    size
}

fn augment(
    l: usize,
    adj: &[Vec<usize>],
    match_l: &mut [usize],
    match_r: &mut [usize],
    dist: &mut [usize],
) -> bool {
    for &r in &adj[l] {
        let m = match_r[r];
        if m == NIL || (dist[m] == dist[l] + 1 && augment(m, adj, match_l, match_r, dist)) {
            match_l[l] = r;
            match_r[r] = l;
            return true;
        }
    }
    dist[l] = usize::MAX;
    false
}

/// True iff the grid lines between `left` and `right` admit a matching that
/// saturates every node of `right`.
pub fn has_covering_matching(grid: &Grid, left: &NodeSet, right: &NodeSet) -> bool {
    if right.is_empty() {
        return true;
    }
    // right side drives the search so the matching size is compared to |right|
    let adj: Vec<Vec<usize>> = right
        .iter()
        .map(|r| {
            let mut v: Vec<usize> = grid
                .incident(r)
                .iter()
                .filter_map(|&(j, _)| left.position(j))
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    max_bipartite_matching(left.len(), &adj) == right.len()
}
