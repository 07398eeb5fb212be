use crate::grid::{induced_lines, Grid, NodeSet};
use rand::seq::index::sample;
use rand::Rng;
use std::collections::BTreeSet;

/// Failure sets of `k` lines inside `area` that keep the grid connected.
///
/// When there are at most `sample_n` such `k`-subsets of the area's lines
/// (counting before the connectivity filter) all connected ones are returned
/// in lexicographic order. Otherwise up to `sample_n` distinct uniform
/// samples are drawn and returned sorted.
pub fn enumerate_failure_sets<R: Rng + ?Sized>(
    grid: &Grid,
    area: &NodeSet,
    k: usize,
    sample_n: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let lines = induced_lines(grid, area);
    let m = lines.len();
    if k == 0 || k > m {
        return Vec::new();
    }
    if binomial_at_most(m, k, sample_n) {
        let mut out = Vec::new();
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let set: Vec<usize> = idx.iter().map(|&i| lines[i]).collect();
            if grid.stays_connected_without(&set) {
                out.push(set);
            }
            // next combination
            let mut i = k;
            while i > 0 && idx[i - 1] == m - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
        return out;
    }

    let mut seen = BTreeSet::new();
    let mut order = Vec::new();
    let max_draws = 50 * sample_n + 1000;
    for _ in 0..max_draws {
        if order.len() >= sample_n {
            break;
        }
        let mut set: Vec<usize> = sample(rng, m, k).into_iter().map(|i| lines[i]).collect();
        set.sort_unstable();
        if seen.contains(&set) {
            continue;
        }
        seen.insert(set.clone());
        if grid.stays_connected_without(&set) {
            order.push(set);
        }
    }
    order.sort();
    order
}

fn binomial_at_most(m: usize, k: usize, limit: usize) -> bool {
    let k = k.min(m - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (m - i) as u128 / (i + 1) as u128;
        if c > limit as u128 {
            return false;
        }
    }
    c <= limit as u128
}
