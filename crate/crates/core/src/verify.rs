//! Self-checks of the structural guarantees on randomly generated instances.
//!
//! Each suite returns one [`Check`] per property it tested; a run passes when
//! every check passes.

use crate::atac::{candidate_areas, check_exactness_conditions, compute_s0, refine_area};
use crate::attack::{simulate_attack, AttackKind, AttackScenario};
use crate::detection::{lifd, sample_exp_weights, weight_success_probability, DetectionConfig};
use crate::grid::{
    admittance, boundary, closure, induced_lines, interior, line_flows, net_outflow, solve_dc_power_flow, Grid,
};
use crate::synth;
use crate::Tolerances;
use nalgebra::DVector;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Flow,
    Distortion,
    Replay,
    Exactness,
    Weights,
    Cycle,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Flow, Suite::Distortion, Suite::Replay, Suite::Exactness, Suite::Weights, Suite::Cycle];
}

impl FromStr for Suite {
    type Err = String;

    /// Suite names; numeric aliases are accepted too.
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "flow" => Suite::Flow,
            "distortion" | "6" => Suite::Distortion,
            "replay" | "10" | "12" => Suite::Replay,
            "exactness" | "15" => Suite::Exactness,
            "weights" | "16" => Suite::Weights,
            "cycle" | "18" => Suite::Cycle,
            other => return Err(format!("unknown suite '{other}'")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Instances per suite (Monte Carlo draws for the weight suite).
    pub trials: Option<usize>,
    /// Restrict the weight suite to one line count.
    pub m: Option<usize>,
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    match suite {
        Suite::Flow => flow(opts.trials.unwrap_or(50), &mut rng),
        Suite::Distortion => containment(AttackKind::Distortion, opts.trials.unwrap_or(200), &mut rng),
        Suite::Replay => containment(AttackKind::Replay, opts.trials.unwrap_or(200), &mut rng),
        Suite::Exactness => exactness(opts.trials.unwrap_or(100), &mut rng),
        Suite::Weights => weights(opts.m, opts.trials.unwrap_or(100_000), &mut rng),
        Suite::Cycle => cycle(opts.trials.unwrap_or(50), &mut rng),
    }
}

fn check(suite: Suite, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check { suite, name: name.into(), passed, detail: detail.into() }
}

fn pre_state(g: &Grid) -> DVector<f64> {
    solve_dc_power_flow(g, &DVector::from_column_slice(g.injections())).expect("valid grid")
}

fn flow<R: Rng>(trials: usize, rng: &mut R) -> Vec<Check> {
    let tol = Tolerances::default();
    let (mut worst_res, mut worst_cons) = (0.0_f64, 0.0_f64);
    for _ in 0..trials {
        let n = rng.random_range(2..=60);
        let extra = rng.random_range(0..=n);
        let g = synth::random_connected_grid(n, extra, rng);
        let p = DVector::from_column_slice(g.injections());
        let th = solve_dc_power_flow(&g, &p).expect("valid grid");
        worst_res = worst_res.max((admittance(&g) * &th - &p).amax());
        let out = net_outflow(&g, &line_flows(&g, &th));
        worst_cons = worst_cons.max(out.iter().zip(p.iter()).fold(0.0, |m, (a, b)| m.max((a - b).abs())));
    }
    vec![
        check(Suite::Flow, "power-flow residual", worst_res < tol.solve, format!("max residual {worst_res:.3e}")),
        check(Suite::Flow, "flow conservation", worst_cons < tol.solve, format!("max imbalance {worst_cons:.3e}")),
    ]
}

/// Random grid, area and failure set, for the containment suites. The
/// complement of the area always keeps an interior node.
pub fn random_scenario<R: Rng>(kind: AttackKind, rng: &mut R) -> (Grid, DVector<f64>, AttackScenario) {
    loop {
        let n = rng.random_range(15..=40);
        let g = synth::random_connected_grid(n, n / 2, rng);
        let h = synth::grow_area(&g, rng.random_range(3..=n / 3), rng);
        let lines = induced_lines(&g, &h);
        let k = rng.random_range(0..=lines.len().min(3));
        let failed: Vec<usize> = sample(rng, lines.len(), k).into_iter().map(|i| lines[i]).collect();
        if !g.stays_connected_without(&failed) || interior(&g, &h.complement(n)).is_empty() {
            continue;
        }
        let th = pre_state(&g);
        let sc = AttackScenario { area: h, failed, kind, param: None, seed: rng.random() };
        return (g, th, sc);
    }
}

fn containment<R: Rng>(kind: AttackKind, trials: usize, rng: &mut R) -> Vec<Check> {
    let tol = Tolerances::default();
    let suite = if kind == AttackKind::Distortion { Suite::Distortion } else { Suite::Replay };
    let (mut support_ok, mut cover_ok) = (0, 0);
    for _ in 0..trials {
        let (g, th, sc) = random_scenario(kind, rng);
        let n = g.node_count();
        let (obs, _) = simulate_attack(&g, &th, &sc).expect("connected scenario");
        let a = admittance(&g);
        let s0 = compute_s0(&a, &obs.p, &obs.theta_obs, &tol);
        let outside = sc.area.complement(n);
        let expected = match kind {
            AttackKind::Distortion => interior(&g, &outside).complement(n),
            AttackKind::Replay => boundary(&g, &sc.area).union(&boundary(&g, &outside)),
        };
        support_ok += usize::from(s0 == expected);
        cover_ok += usize::from(candidate_areas(&g, &s0).iter().any(|c| sc.area.is_subset(&c.nodes)));
    }
    vec![
        check(suite, "suspicious set", support_ok == trials, format!("{support_ok}/{trials}")),
        check(suite, "some candidate covers the area", cover_ok == trials, format!("{cover_ok}/{trials}")),
    ]
}

fn exactness<R: Rng>(trials: usize, rng: &mut R) -> Vec<Check> {
    let tol = Tolerances::default();
    let (mut done, mut exact, mut draws) = (0, 0, 0);
    while done < trials && draws < 10_000 * trials.max(1) {
        draws += 1;
        let (g, th, sc) = random_scenario(AttackKind::Distortion, rng);
        let sa = interior(&g, &closure(&g, &sc.area));
        if !check_exactness_conditions(&g, &sa, &sc.area) {
            continue;
        }
        done += 1;
        let (obs, _) = simulate_attack(&g, &th, &sc).expect("connected scenario");
        let a = admittance(&g);
        let cand = closure(&g, &sc.area);
        if let Ok(r) = refine_area(&g, &a, &obs.theta, &obs.theta_obs, &cand, &tol) {
            exact += usize::from(r.nodes == sc.area);
        }
    }
    vec![check(Suite::Exactness, "refinement recovers the area", done == trials && exact == trials, format!("{exact}/{done}"))]
}

fn weights<R: Rng>(only_m: Option<usize>, trials: usize, rng: &mut R) -> Vec<Check> {
    let ms: Vec<usize> = match only_m {
        Some(m) => vec![m],
        None => (2..=12).collect(),
    };
    let mut out = Vec::new();
    for m in ms {
        for k in 1..m {
            let p = weight_success_probability(m, k).expect("1 <= k < m");
            let hits = (0..trials)
                .filter(|_| {
                    let w = sample_exp_weights(m, 1.0, rng);
                    w[..k].iter().sum::<f64>() < w[k..].iter().sum::<f64>()
                })
                .count();
            let freq = hits as f64 / trials as f64;
            let sd = (p * (1.0 - p) / trials as f64).sqrt();
            out.push(check(
                Suite::Weights,
                format!("m={m} k={k}"),
                (freq - p).abs() <= 3.0 * sd,
                format!("observed {freq:.5}, closed form {p:.5}"),
            ));
        }
    }
    out
}

fn cycle<R: Rng>(trials: usize, rng: &mut R) -> Vec<Check> {
    let m = 8;
    let mut exact = 0;
    for _ in 0..trials {
        let (g, h) = synth::spoked_cycle(m, rng);
        let th = pre_state(&g);
        let failed: Vec<usize> = sample(rng, m, (m - 1) / 2).into_iter().collect();
        let sc = AttackScenario { area: h.clone(), failed, kind: AttackKind::Distortion, param: None, seed: rng.random() };
        let (obs, truth) = simulate_attack(&g, &th, &sc).expect("outer ring keeps the grid connected");
        let cfg = DetectionConfig { t: 0, ..DetectionConfig::default() };
        let a = admittance(&g);
        if let Ok(r) = lifd(&g, &a, &h, &obs.theta, &obs.theta_obs, &cfg, rng) {
            let mut want = truth.scenario.failed.clone();
            want.sort_unstable();
            exact += usize::from(r.failed == want);
        }
    }
    vec![check(Suite::Cycle, "unit weights recover minority failures", exact == trials, format!("{exact}/{trials}"))]
}
