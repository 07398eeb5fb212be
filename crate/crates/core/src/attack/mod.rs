//! Attack scenarios: line failures inside an area plus fabricated angles.

mod enumerate;
mod gadget;

pub use enumerate::enumerate_failure_sets;
pub use gadget::{gen_3partition_gadget, Gadget};

use crate::grid::{induced_lines, solve_dc_power_flow, FlowError, Grid, GridError, NodeSet};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    /// Reported angles in the area are the true ones plus Gaussian noise.
    Distortion,
    /// Reported angles in the area come from a flow-consistent alternate
    /// injection vector that agrees with the true one inside the area.
    Replay,
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AttackKind::Distortion => "distortion",
            AttackKind::Replay => "replay",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackScenario {
    pub area: NodeSet,
    /// Failed line indices, all inside `area`.
    pub failed: Vec<usize>,
    pub kind: AttackKind,
    /// Noise standard deviation (distortion) or perturbation scale (replay).
    /// `None` picks the default scale.
    pub param: Option<f64>,
    pub seed: u64,
}

/// What the control center sees.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub theta: DVector<f64>,
    pub theta_obs: DVector<f64>,
    /// `A θ`
    pub p: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub theta_post: DVector<f64>,
    pub grid_post: Grid,
    pub scenario: AttackScenario,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("removing the failed lines disconnects the grid")]
    DisconnectsGrid,
    #[error("failed line index {0} is not inside the attacked area")]
    FailureOutsideArea(usize),
    #[error("line index {0} out of range")]
    UnknownLine(usize),
    #[error("attack parameter must be finite and nonnegative, got {0}")]
    BadParameter(f64),
    #[error("malformed 3-partition instance: {0}")]
    MalformedInstance(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Grid(GridError),
}

/// The grid after the lines at `failed` open.
pub fn apply_line_failures(grid: &Grid, failed: &[usize]) -> Result<Grid, AttackError> {
    if let Some(&k) = failed.iter().find(|&&k| k >= grid.line_count()) {
        return Err(AttackError::UnknownLine(k));
    }
    grid.without_lines(failed).map_err(|e| match e {
        GridError::Disconnected => AttackError::DisconnectsGrid,
        other => AttackError::Grid(other),
    })
}

/// Default distortion noise level for a pre-attack state `theta`.
pub fn default_sigma(theta: &DVector<f64>) -> f64 {
    let s = 0.1 * theta.amax();
    if s > 0.0 {
        s
    } else {
        0.1
    }
}

/// Default replay perturbation scale given the injections outside the area.
pub fn default_replay_scale(p: &DVector<f64>, area: &NodeSet) -> f64 {
    let inf = (0..p.len()).filter(|&i| !area.contains(i)).fold(0.0_f64, |m, i| m.max(p[i].abs()));
    if inf > 0.0 {
        0.2 * inf
    } else {
        0.2
    }
}

/// Open the failed lines, recompute the true post-attack state and fabricate
/// the reported angles in the area. Randomness is drawn from `scenario.seed`.
pub fn simulate_attack(
    grid: &Grid,
    theta: &DVector<f64>,
    scenario: &AttackScenario,
) -> Result<(Observation, GroundTruth), AttackError> {
    let n = grid.node_count();
    let inside = induced_lines(grid, &scenario.area);
    for &k in &scenario.failed {
        if k >= grid.line_count() {
            return Err(AttackError::UnknownLine(k));
        }
        if !inside.contains(&k) {
            return Err(AttackError::FailureOutsideArea(k));
        }
    }
    if let Some(v) = scenario.param {
        if !(v.is_finite() && v >= 0.0) {
            return Err(AttackError::BadParameter(v));
        }
    }

    let a = crate::grid::admittance(grid);
    let p = &a * theta;
    let grid_post = apply_line_failures(grid, &scenario.failed)?;
    let theta_post = solve_dc_power_flow(&grid_post, &p)?;

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut theta_obs = theta_post.clone();
    match scenario.kind {
        AttackKind::Distortion => {
            let sigma = scenario.param.unwrap_or_else(|| default_sigma(theta));
            let noise = Normal::new(0.0, sigma).map_err(|_| AttackError::BadParameter(sigma))?;
            for i in scenario.area.iter() {
                theta_obs[i] += noise.sample(&mut rng);
            }
        }
        AttackKind::Replay => {
            let scale = scenario.param.unwrap_or_else(|| default_replay_scale(&p, &scenario.area));
            let noise = Normal::new(0.0, scale).map_err(|_| AttackError::BadParameter(scale))?;
            let outside = scenario.area.complement(n);
            let mut z: Vec<f64> = outside.iter().map(|_| noise.sample(&mut rng)).collect();
            if !z.is_empty() {
                let mean = z.iter().sum::<f64>() / z.len() as f64;
                z.iter_mut().for_each(|v| *v -= mean);
            }
            let mut p_replay = p.clone();
            for (i, dz) in outside.iter().zip(&z) {
                p_replay[i] += dz;
            }
            let theta_replay = solve_dc_power_flow(grid, &p_replay)?;
            // A replayed snapshot is only defined up to a common shift. Pinning
            // it at the reference bus would make it agree with the true state
            // there, so the area is shifted by a random offset.
            let offset = if scale > 0.0 {
                Normal::new(0.0, default_sigma(theta)).map_err(|_| AttackError::BadParameter(scale))?.sample(&mut rng)
            } else {
                0.0
            };
            for i in scenario.area.iter() {
                theta_obs[i] = theta_replay[i] + offset;
            }
        }
    }

    let obs = Observation { theta: theta.clone(), theta_obs, p };
    let truth = GroundTruth { theta_post, grid_post, scenario: scenario.clone() };
    Ok((obs, truth))
}
