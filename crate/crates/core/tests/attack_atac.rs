use gridreact::atac::{candidate_areas, check_exactness_conditions, compute_s0, refine_area, RefineError};
use gridreact::attack::{enumerate_failure_sets, gen_3partition_gadget, simulate_attack, AttackKind, AttackScenario};
use gridreact::grid::{admittance, closure, induced_lines, interior, solve_dc_power_flow};
use gridreact::verify::random_scenario;
use gridreact::{Grid, NodeSet, Tolerances};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Does opening the lines in `mask` make `theta` balance the injections?
fn explains(g: &Grid, theta: &DVector<f64>, mask: u64) -> bool {
    let mut bal: Vec<f64> = g.injections().to_vec();
    for (k, l) in g.lines().iter().enumerate() {
        if mask >> k & 1 == 1 {
            continue;
        }
        let f = (theta[l.from] - theta[l.to]) / l.reactance;
        bal[l.from] -= f;
        bal[l.to] += f;
    }
    bal.iter().all(|v| v.abs() < 1e-9)
}

fn splits_in_two(s: &[u64], b: u64) -> bool {
    (0u32..1 << s.len()).any(|m| s.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, v)| v).sum::<u64>() == b)
}

#[test]
fn two_bin_gadgets_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut yes, mut no) = (0, 0);
    for _ in 0..60 {
        let b = rng.random_range(6..=14u64);
        // six positive sizes summing to 2b
        let mut s = vec![1u64; 6];
        for _ in 0..2 * b - 6 {
            s[rng.random_range(0..6)] += 1;
        }
        let g = gen_3partition_gadget(&s, b).unwrap();
        assert_eq!(g.grid.line_count(), 12);
        let any = (0u64..1 << 12).any(|m| explains(&g.grid, &g.theta_post, m));
        let want = splits_in_two(&s, b);
        assert_eq!(any, want, "sizes {s:?} bound {b}");
        if want {
            yes += 1;
        } else {
            no += 1;
        }
    }
    assert!(yes > 0 && no > 0);
}

#[test]
fn gadget_pre_state_is_the_power_flow() {
    let g = gen_3partition_gadget(&[3, 3, 4, 2, 5, 3], 10).unwrap();
    let th = solve_dc_power_flow(&g.grid, &DVector::from_column_slice(g.grid.injections())).unwrap();
    assert!((th - &g.theta).amax() < 1e-9);
}

fn path(n: u64) -> Grid {
    let lines = (1..n).map(|i| (i - 1, i, i + 1, 0.1 * i as f64)).collect();
    let mut p = vec![0.0; n as usize];
    p[0] = 1.0;
    p[n as usize - 1] = -1.0;
    Grid::new((1..=n).zip(p).collect(), lines, 1).unwrap()
}

fn set(v: &[usize]) -> NodeSet {
    v.iter().copied().collect()
}

#[test]
fn distortion_on_a_path_flags_the_area_and_its_neighbours() {
    let g = path(8);
    let th = solve_dc_power_flow(&g, &DVector::from_column_slice(g.injections())).unwrap();
    let sc = AttackScenario { area: set(&[2, 3]), failed: vec![], kind: AttackKind::Distortion, param: Some(0.05), seed: 1 };
    let (obs, _) = simulate_attack(&g, &th, &sc).unwrap();
    let tol = Tolerances::default();
    let a = admittance(&g);
    assert_eq!(compute_s0(&a, &obs.p, &obs.theta_obs, &tol), set(&[1, 2, 3, 4]));
    let cands = candidate_areas(&g, &set(&[1, 2, 3, 4]));
    assert_eq!(cands[0].nodes, set(&[1, 2, 3, 4]));
    // the two unflagged pieces touch different flagged nodes, so they stay apart
    assert_eq!(cands.len(), 3);
    assert_eq!(cands[1].nodes, set(&[0, 1, 2, 3, 4]));
    assert_eq!(cands[2].nodes, set(&[1, 2, 3, 4, 5, 6, 7]));

    let r = refine_area(&g, &a, &obs.theta, &obs.theta_obs, &cands[0].nodes, &tol).unwrap();
    assert_eq!(r.interior, set(&[2, 3]));
    assert_eq!(r.nodes, set(&[2, 3]));
}

#[test]
fn candidate_away_from_the_attack_is_infeasible() {
    let g = path(8);
    let th = solve_dc_power_flow(&g, &DVector::from_column_slice(g.injections())).unwrap();
    let sc = AttackScenario { area: set(&[2, 3]), failed: vec![], kind: AttackKind::Distortion, param: Some(0.05), seed: 2 };
    let (obs, _) = simulate_attack(&g, &th, &sc).unwrap();
    let a = admittance(&g);
    let far = closure(&g, &set(&[6]));
    let err = refine_area(&g, &a, &obs.theta, &obs.theta_obs, &far, &Tolerances::default()).unwrap_err();
    assert!(matches!(err, RefineError::Infeasible { .. }));
}

#[test]
fn enumeration_skips_disconnecting_sets() {
    let g = path(5);
    let all = set(&[0, 1, 2, 3, 4]);
    assert!(enumerate_failure_sets(&g, &all, 1, 100, &mut ChaCha8Rng::seed_from_u64(0)).is_empty());
    let ring = Grid::new((1..=4).map(|i| (i, 0.0)).collect(), vec![(0, 1, 2, 0.1), (1, 2, 3, 0.1), (2, 3, 4, 0.1), (3, 1, 4, 0.1)], 1)
        .unwrap();
    let sets = enumerate_failure_sets(&ring, &NodeSet::full(4), 1, 100, &mut ChaCha8Rng::seed_from_u64(0));
    assert_eq!(sets, vec![vec![0], vec![1], vec![2], vec![3]]);
    assert!(enumerate_failure_sets(&ring, &NodeSet::full(4), 2, 100, &mut ChaCha8Rng::seed_from_u64(0)).is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn some_candidate_covers_the_area(seed: u64, replay: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = if replay { AttackKind::Replay } else { AttackKind::Distortion };
        let (g, th, sc) = random_scenario(kind, &mut rng);
        let (obs, _) = simulate_attack(&g, &th, &sc).unwrap();
        let s0 = compute_s0(&admittance(&g), &obs.p, &obs.theta_obs, &Tolerances::default());
        let cands = candidate_areas(&g, &s0);
        if !replay {
            prop_assert!(sc.area.is_subset(&cands[0].nodes));
        }
        prop_assert!(cands.iter().any(|c| sc.area.is_subset(&c.nodes)));
    }

    #[test]
    fn refining_the_closure_keeps_the_area(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, th, sc) = random_scenario(AttackKind::Distortion, &mut rng);
        let (obs, _) = simulate_attack(&g, &th, &sc).unwrap();
        let a = admittance(&g);
        let cand = closure(&g, &sc.area);
        let r = refine_area(&g, &a, &obs.theta, &obs.theta_obs, &cand, &Tolerances::default()).unwrap();
        prop_assert_eq!(&r.interior, &interior(&g, &cand));
        prop_assert!(r.nodes.is_subset(&r.interior));
        prop_assert!(sc.area.is_subset(&r.nodes));
        if check_exactness_conditions(&g, &r.interior, &sc.area) {
            prop_assert_eq!(&r.nodes, &sc.area);
        }
    }

    #[test]
    fn failures_stay_inside_the_area(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, th, sc) = random_scenario(AttackKind::Distortion, &mut rng);
        let (obs, truth) = simulate_attack(&g, &th, &sc).unwrap();
        let inside = induced_lines(&g, &sc.area);
        prop_assert!(sc.failed.iter().all(|l| inside.contains(l)));
        let outside = sc.area.complement(g.node_count());
        for i in outside.iter() {
            prop_assert_eq!(obs.theta_obs[i], truth.theta_post[i]);
        }
    }
}
