use gridreact::attack::{simulate_attack, AttackKind, AttackScenario};
use gridreact::grid::{admittance, induced_lines, solve_dc_power_flow};
use gridreact::lp::{solve_lp, Bound, FailureLp, LpProblem, LpStatus};
use gridreact::{Grid, NodeSet};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Area 1..=4 is a 4-cycle with the chord 1-3; every area node has an
/// outside neighbour and the outside nodes form a path.
fn ringed_square<R: Rng>(rng: &mut R) -> Grid {
    let pairs = [(1, 2), (2, 3), (3, 4), (1, 4), (1, 3), (1, 5), (2, 6), (3, 7), (4, 8), (5, 6), (6, 7), (7, 8)];
    let lines = pairs
        .iter()
        .enumerate()
        .map(|(i, &(u, v))| (i as u64, u, v, rng.random_range(0.05..0.5)))
        .collect();
    let mut p: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mean = p.iter().sum::<f64>() / 8.0;
    p.iter_mut().for_each(|v| *v -= mean);
    Grid::new((1..=8).zip(p).collect(), lines, 5).unwrap()
}

fn laplacian(g: &Grid) -> DMatrix<f64> {
    let n = g.node_count();
    let mut a = DMatrix::zeros(n, n);
    for l in g.lines() {
        let b = 1.0 / l.reactance;
        a[(l.from, l.from)] += b;
        a[(l.to, l.to)] += b;
        a[(l.from, l.to)] -= b;
        a[(l.to, l.from)] -= b;
    }
    a
}

/// Minimum weighted L1 over the vertices of the feasible set: for every
/// support `F` of flow changes solve for `(x_F, y)`, keep the ones that are
/// unique and consistent.
fn brute_force_optimum(g: &Grid, area: &NodeSet, theta: &DVector<f64>, theta_star: &DVector<f64>, w: &[f64]) -> f64 {
    let n = g.node_count();
    let a = laplacian(g);
    let s: Vec<usize> = area.iter().collect();
    let lines = induced_lines(g, area);
    let mut r = DVector::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let v = if area.contains(j) { theta[j] } else { theta[j] - theta_star[j] };
            r[i] += a[(i, j)] * v;
        }
    }
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << lines.len()) {
        let f: Vec<usize> = (0..lines.len()).filter(|k| mask >> k & 1 == 1).collect();
        let cols = f.len() + s.len();
        let mut m = DMatrix::zeros(n, cols);
        for (c, &k) in f.iter().enumerate() {
            let l = g.line(lines[k]);
            m[(l.from, c)] = 1.0;
            m[(l.to, c)] = -1.0;
        }
        for (c, &j) in s.iter().enumerate() {
            for i in 0..n {
                m[(i, f.len() + c)] = a[(i, j)];
            }
        }
        let svd = m.clone().svd(true, true);
        let rank = svd.singular_values.iter().filter(|&&v| v > 1e-9).count();
        if rank < cols {
            continue;
        }
        let z = svd.solve(&r, 1e-12).unwrap();
        if (&m * &z - &r).norm() > 1e-8 * (1.0 + r.norm()) {
            continue;
        }
        let cost: f64 = f.iter().enumerate().map(|(c, &k)| w[k] * z[c].abs()).sum();
        best = best.min(cost);
    }
    best
}

fn attacked<R: Rng>(rng: &mut R) -> (Grid, NodeSet, DVector<f64>, DVector<f64>) {
    let g = ringed_square(rng);
    let area = NodeSet::from_sorted_unchecked(vec![0, 1, 2, 3]);
    let theta = solve_dc_power_flow(&g, &DVector::from_column_slice(g.injections())).unwrap();
    let k = rng.random_range(0..=3);
    let failed = sample(rng, 5, k).into_vec();
    let sc = AttackScenario { area: area.clone(), failed, kind: AttackKind::Distortion, param: None, seed: rng.random() };
    let (obs, _) = simulate_attack(&g, &theta, &sc).unwrap();
    (g, area, obs.theta, obs.theta_obs)
}

#[test]
fn lp_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let (g, area, theta, theta_star) = attacked(&mut rng);
        let w: Vec<f64> = (0..5).map(|_| rng.random_range(0.1..3.0)).collect();
        let lp = FailureLp::build(&g, &admittance(&g), &area, &theta, &theta_star, &w).unwrap();
        let sol = solve_lp(lp.problem()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let want = brute_force_optimum(&g, &area, &theta, &theta_star, &w);
        assert!((sol.objective - want).abs() < 1e-7 * (1.0 + want), "lp {} vs brute force {}", sol.objective, want);
        assert!(lp.problem().residual(&sol.x) < 1e-8);
    }
}

#[test]
fn small_lp_with_known_optimum() {
    // min x1 + x2 + 3 x3  s.t.  x1 + 2 x2 + x3 = 4,  x2 - x3 + y = 1,  y free
    let e = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 1.0, 0.0, 0.0, 1.0, -1.0, 1.0]);
    let bounds = vec![Bound::NonNegative, Bound::NonNegative, Bound::NonNegative, Bound::Free];
    let p = LpProblem::new(vec![1.0, 1.0, 3.0, 0.0], e, vec![4.0, 1.0], bounds).unwrap();
    let s = solve_lp(&p).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective - 2.0).abs() < 1e-9);
    assert!((s.x[1] - 2.0).abs() < 1e-9);
    assert!((s.x[3] + 1.0).abs() < 1e-9);
}

#[test]
fn infeasible_and_unbounded_are_reported() {
    let e = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    let p = LpProblem::standard(vec![1.0, 1.0], e.clone(), vec![-1.0]).unwrap();
    assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    let e = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
    let p = LpProblem::standard(vec![-1.0, 0.0], e, vec![0.0]).unwrap();
    assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scaling_weights_scales_the_optimum(seed: u64, c in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, area, theta, theta_star) = attacked(&mut rng);
        let a = admittance(&g);
        let w: Vec<f64> = (0..5).map(|_| rng.random_range(0.1..3.0)).collect();
        let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
        let s1 = solve_lp(FailureLp::build(&g, &a, &area, &theta, &theta_star, &w).unwrap().problem()).unwrap();
        let s2 = solve_lp(FailureLp::build(&g, &a, &area, &theta, &theta_star, &scaled).unwrap().problem()).unwrap();
        prop_assert!((s2.objective - c * s1.objective).abs() < 1e-7 * (1.0 + c * s1.objective));
    }

    #[test]
    fn unattacked_state_costs_nothing(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = ringed_square(&mut rng);
        let area = NodeSet::from_sorted_unchecked(vec![0, 1, 2, 3]);
        let theta = solve_dc_power_flow(&g, &DVector::from_column_slice(g.injections())).unwrap();
        let lp = FailureLp::build(&g, &admittance(&g), &area, &theta, &theta, &[1.0; 5]).unwrap();
        let s = solve_lp(lp.problem()).unwrap();
        prop_assert_eq!(s.status, LpStatus::Optimal);
        prop_assert!(s.objective.abs() < 1e-9);
        let d = lp.decode(&s);
        for (k, i) in area.iter().enumerate() {
            prop_assert!((d.y[k] - theta[i]).abs() < 1e-8);
        }
    }
}
