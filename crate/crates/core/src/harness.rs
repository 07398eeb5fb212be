//! Experiment orchestration: scenario generation, detection and scoring.
//!
//! Every scenario gets its own seeds derived from the master seed and the
//! scenario's position in the fixed enumeration order, so results do not
//! depend on how scenarios are scheduled across threads.

use crate::attack::{enumerate_failure_sets, gen_3partition_gadget, simulate_attack, AttackError, AttackKind, AttackScenario, GroundTruth};
use crate::detection::{react, DetectionConfig, ReactOutcome};
use crate::grid::{solve_dc_power_flow, FlowError, Grid, NodeId, NodeSet};
use crate::io::{parse_grid, IoError};
use crate::Tolerances;
use nalgebra::DVector;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GadgetSpec {
    pub sizes: Vec<u64>,
    pub bound: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Grid JSON, relative to the config file. Ignored when `gadget` is set.
    #[serde(default)]
    pub grid: Option<PathBuf>,
    /// Attacked area as node ids.
    #[serde(default)]
    pub area: Option<Vec<NodeId>>,
    /// Build a 3-partition gadget instead of reading a grid; the area is the
    /// whole gadget.
    #[serde(default)]
    pub gadget: Option<GadgetSpec>,
    pub k: Vec<usize>,
    /// Failure sets per `k`; all of them when there are at most this many.
    pub samples: usize,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<AttackKind>,
    /// Distortion noise level, default `0.1 ‖θ‖∞`.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Replay perturbation scale, default `0.2 ‖p_H̄‖∞`.
    #[serde(default)]
    pub replay_scale: Option<f64>,
    #[serde(rename = "T", default = "default_t")]
    pub t: usize,
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; `None` uses every core, 1 runs sequentially.
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub tol: Tolerances,
}

fn default_kinds() -> Vec<AttackKind> {
    vec![AttackKind::Distortion]
}

fn default_t() -> usize {
    20
}

fn default_rate() -> f64 {
    1.0
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: IoError },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

impl ExperimentConfig {
    /// Read a config file; a relative grid path is resolved against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read { path: path.into(), source })?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Parse { path: path.into(), source: IoError::Json(e) })?;
        if let Some(g) = &cfg.grid {
            if g.is_relative() {
                cfg.grid = Some(path.parent().unwrap_or(Path::new("")).join(g));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.into()));
        if self.samples == 0 {
            return bad("samples must be at least 1");
        }
        if self.k.is_empty() || self.k.contains(&0) {
            return bad("k must list positive failure sizes");
        }
        if self.kinds.is_empty() {
            return bad("kinds must not be empty");
        }
        if self.jobs == Some(0) {
            return bad("jobs must be positive");
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return bad("rate must be positive");
        }
        match (&self.gadget, &self.grid, &self.area) {
            (Some(_), _, _) => Ok(()),
            (None, Some(_), Some(a)) if !a.is_empty() => Ok(()),
            (None, None, _) => bad("either grid or gadget is required"),
            (None, Some(_), _) => bad("area must list at least one node"),
        }
    }

    pub fn detection(&self) -> DetectionConfig {
        DetectionConfig { t: self.t, rate: self.rate, tol: self.tol }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioMetrics {
    pub false_negatives: usize,
    pub false_positives: usize,
    pub exact: bool,
    pub area_extra_nodes: usize,
    pub phase_error_pct: f64,
    pub confidence: f64,
    pub runtime_ms: f64,
}

/// Compare an outcome with the ground truth. Angles of attacked nodes that
/// the detection area does not cover are taken from the observation.
pub fn score_scenario(truth: &GroundTruth, theta_obs: &DVector<f64>, outcome: &ReactOutcome) -> ScenarioMetrics {
    let truth_f = &truth.scenario.failed;
    let found = &outcome.result.failed;
    let false_negatives = truth_f.iter().filter(|k| !found.contains(k)).count();
    let false_positives = found.iter().filter(|k| !truth_f.contains(k)).count();
    let h = &truth.scenario.area;
    let (mut num, mut den) = (0.0, 0.0);
    for i in h.iter() {
        let est = match outcome.result.area.position(i) {
            Some(k) => outcome.result.theta[k],
            None => theta_obs[i],
        };
        num += (est - truth.theta_post[i]).powi(2);
        den += truth.theta_post[i].powi(2);
    }
    ScenarioMetrics {
        false_negatives,
        false_positives,
        exact: false_negatives == 0 && false_positives == 0,
        area_extra_nodes: outcome.detected.difference(h).len(),
        phase_error_pct: 100.0 * num.sqrt() / den.sqrt().max(1e-12),
        confidence: outcome.result.confidence,
        runtime_ms: 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRow {
    pub kind: AttackKind,
    pub k: usize,
    pub scenario_id: usize,
    pub failed: Vec<usize>,
    pub metrics: ScenarioMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub kind: AttackKind,
    pub k: usize,
    pub scenarios: usize,
    pub exact_pct: f64,
    pub mean_fn: f64,
    pub mean_fp: f64,
    pub mean_extra_nodes: f64,
    pub mean_phase_err_pct: f64,
    pub mean_confidence: f64,
    pub mean_runtime_ms: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<ScenarioRow>,
}

/// Columns of the per-scenario CSV. `phase_err_pct` is the relative L2 error
/// of the recovered angles on `H` against the true post-attack angles, in percent.
pub const CSV_HEADER: &str = "kind,k,scenario_id,fn,fp,exact,extra_nodes,phase_err_pct,confidence,runtime_ms";

impl ExperimentReport {
    /// One summary per (kind, k) cell in run order.
    pub fn summary(&self) -> Vec<CellSummary> {
        let mut out: Vec<CellSummary> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for r in &self.rows {
            let pos = out.iter().position(|c| c.kind == r.kind && c.k == r.k).unwrap_or_else(|| {
                out.push(CellSummary {
                    kind: r.kind,
                    k: r.k,
                    scenarios: 0,
                    exact_pct: 0.0,
                    mean_fn: 0.0,
                    mean_fp: 0.0,
                    mean_extra_nodes: 0.0,
                    mean_phase_err_pct: 0.0,
                    mean_confidence: 0.0,
                    mean_runtime_ms: 0.0,
                });
                counts.push(0);
                out.len() - 1
            });
            let c = &mut out[pos];
            let m = &r.metrics;
            counts[pos] += 1;
            c.exact_pct += if m.exact { 1.0 } else { 0.0 };
            c.mean_fn += m.false_negatives as f64;
            c.mean_fp += m.false_positives as f64;
            c.mean_extra_nodes += m.area_extra_nodes as f64;
            c.mean_phase_err_pct += m.phase_error_pct;
            c.mean_confidence += m.confidence;
            c.mean_runtime_ms += m.runtime_ms;
        }
        for (c, &n) in out.iter_mut().zip(&counts) {
            let n = n as f64;
            c.scenarios = n as usize;
            c.exact_pct *= 100.0 / n;
            c.mean_fn /= n;
            c.mean_fp /= n;
            c.mean_extra_nodes /= n;
            c.mean_phase_err_pct /= n;
            c.mean_confidence /= n;
            c.mean_runtime_ms /= n;
        }
        out
    }

    /// Per-scenario CSV. `phase_err_pct` is `100 ‖θ̂_H − θ'_H‖₂ / ‖θ'_H‖₂`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let m = &r.metrics;
            writeln!(
                s,
                "{},{},{},{},{},{},{},{:.6},{:.6},{:.3}",
                r.kind,
                r.k,
                r.scenario_id,
                m.false_negatives,
                m.false_positives,
                m.exact,
                m.area_extra_nodes,
                m.phase_error_pct,
                m.confidence,
                m.runtime_ms
            )
            .expect("writing to a string");
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from(
            "kind,k,scenarios,exact_pct,mean_fn,mean_fp,mean_extra_nodes,mean_phase_err_pct,mean_confidence,mean_runtime_ms\n",
        );
        for c in self.summary() {
            writeln!(
                s,
                "{},{},{},{:.3},{:.4},{:.4},{:.4},{:.6},{:.6},{:.3}",
                c.kind,
                c.k,
                c.scenarios,
                c.exact_pct,
                c.mean_fn,
                c.mean_fp,
                c.mean_extra_nodes,
                c.mean_phase_err_pct,
                c.mean_confidence,
                c.mean_runtime_ms
            )
            .expect("writing to a string");
        }
        s
    }
}

/// Seed number `index` of the stream `tag` under the master seed.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(tag);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

const STREAM_FAILURES: u64 = 1;
const STREAM_ATTACK: u64 = 2;
const STREAM_DETECT: u64 = 3;

/// Grid, pre-attack state and area an experiment runs on.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: Grid,
    pub theta: DVector<f64>,
    pub area: NodeSet,
}

impl Setup {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        cfg.validate()?;
        if let Some(gs) = &cfg.gadget {
            let g = gen_3partition_gadget(&gs.sizes, gs.bound)?;
            return Ok(Self { grid: g.grid, theta: g.theta, area: g.area });
        }
        let path = cfg.grid.as_ref().expect("validated");
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read { path: path.clone(), source })?;
        let grid = parse_grid(&text).map_err(|source| HarnessError::Parse { path: path.clone(), source })?;
        let ids = cfg.area.as_ref().expect("validated");
        let area = grid
            .indices_of(ids)
            .map_err(|id| HarnessError::Parse { path: path.clone(), source: IoError::UnknownNode(id) })?;
        let theta = solve_dc_power_flow(&grid, &DVector::from_column_slice(grid.injections()))?;
        Ok(Self { grid, theta, area })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedScenario {
    pub id: usize,
    pub scenario: AttackScenario,
    pub detect_seed: u64,
}

/// All scenarios of an experiment in their fixed order: kinds outer, then
/// `k`, then failure sets in enumeration order. Failure sets are shared by
/// the attack kinds.
pub fn plan(setup: &Setup, cfg: &ExperimentConfig) -> Vec<PlannedScenario> {
    let mut out = Vec::new();
    let sets: Vec<(usize, Vec<Vec<usize>>)> = cfg
        .k
        .iter()
        .map(|&k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_FAILURES, k as u64));
            (k, enumerate_failure_sets(&setup.grid, &setup.area, k, cfg.samples, &mut rng))
        })
        .collect();
    for &kind in &cfg.kinds {
        let param = match kind {
            AttackKind::Distortion => cfg.sigma,
            AttackKind::Replay => cfg.replay_scale,
        };
        for (_, fs) in &sets {
            for f in fs {
                let id = out.len();
                out.push(PlannedScenario {
                    id,
                    scenario: AttackScenario {
                        area: setup.area.clone(),
                        failed: f.clone(),
                        kind,
                        param,
                        seed: derive_seed(cfg.seed, STREAM_ATTACK, id as u64),
                    },
                    detect_seed: derive_seed(cfg.seed, STREAM_DETECT, id as u64),
                });
            }
        }
    }
    out
}

/// Simulate, detect and score one planned scenario.
pub fn run_scenario(setup: &Setup, det: &DetectionConfig, p: &PlannedScenario) -> Result<ScenarioRow, HarnessError> {
    let (obs, truth) = simulate_attack(&setup.grid, &setup.theta, &p.scenario)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.detect_seed);
    let start = Instant::now();
    let outcome = react(&setup.grid, &obs.theta, &obs.theta_obs, det, &mut rng);
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let mut metrics = score_scenario(&truth, &obs.theta_obs, &outcome);
    metrics.runtime_ms = elapsed;
    Ok(ScenarioRow { kind: p.scenario.kind, k: p.scenario.failed.len(), scenario_id: p.id, failed: p.scenario.failed.clone(), metrics })
}

/// Map `f` over `items` keeping input order, on up to `jobs` threads.
pub fn map_ordered<T, U, F>(items: &[T], jobs: Option<usize>, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match jobs {
            Some(1) => {}
            Some(j) => {
                if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(j).build() {
                    return pool.install(|| items.par_iter().map(&f).collect());
                }
            }
            None => return items.par_iter().map(&f).collect(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
    items.iter().map(f).collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let setup = Setup::from_config(cfg)?;
    let det = cfg.detection();
    let planned = plan(&setup, cfg);
    let rows = map_ordered(&planned, cfg.jobs, |p| run_scenario(&setup, &det, p));
    Ok(ExperimentReport { rows: rows.into_iter().collect::<Result<_, _>>()? })
}
