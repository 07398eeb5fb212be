//! JSON and MATPOWER-style file formats.
//!
//! Everything on disk refers to nodes and lines by their ids. Angle vectors
//! are written as `{"id", "value"}` records so files stay readable when the
//! id order differs from the internal index order.

use crate::attack::{AttackKind, AttackScenario, GroundTruth, Observation};
use crate::atac::CandidateOrigin;
use crate::detection::ReactOutcome;
use crate::grid::{Grid, GridError, LineId, NodeId, NodeSet};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("node {0} listed twice")]
    DuplicateNode(NodeId),
    #[error("value for node {0} is missing")]
    MissingNode(NodeId),
    #[error("line {line}: {msg}")]
    Matpower { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub id: LineId,
    pub u: NodeId,
    pub v: NodeId,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    pub reference: NodeId,
}

impl GridFile {
    pub fn from_grid(grid: &Grid) -> Self {
        let nodes = grid
            .node_ids()
            .iter()
            .zip(grid.injections())
            .map(|(&id, &p)| NodeRecord { id, p })
            .collect();
        let edges = grid
            .lines()
            .iter()
            .map(|l| EdgeRecord { id: l.id, u: grid.node_id(l.from), v: grid.node_id(l.to), x: l.reactance })
            .collect();
        Self { nodes, edges, reference: grid.node_id(grid.reference()) }
    }

    pub fn to_grid(&self) -> Result<Grid, GridError> {
        Grid::new(
            self.nodes.iter().map(|n| (n.id, n.p)).collect(),
            self.edges.iter().map(|e| (e.id, e.u, e.v, e.x)).collect(),
            self.reference,
        )
    }
}

pub fn parse_grid(text: &str) -> Result<Grid, IoError> {
    let f: GridFile = serde_json::from_str(text)?;
    Ok(f.to_grid()?)
}

pub fn grid_to_json(grid: &Grid) -> String {
    serde_json::to_string_pretty(&GridFile::from_grid(grid)).expect("grid serializes")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(rename = "H")]
    pub area: Vec<NodeId>,
    #[serde(rename = "F")]
    pub failed: Vec<LineId>,
    pub kind: AttackKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioFile {
    pub fn from_scenario(grid: &Grid, s: &AttackScenario) -> Self {
        Self {
            area: grid.ids_of(&s.area),
            failed: grid.line_ids_of(&s.failed),
            kind: s.kind,
            param: s.param,
            seed: s.seed,
        }
    }

    pub fn to_scenario(&self, grid: &Grid) -> Result<AttackScenario, IoError> {
        Ok(AttackScenario {
            area: grid.indices_of(&self.area).map_err(IoError::UnknownNode)?,
            failed: grid.line_indices_of(&self.failed)?,
            kind: self.kind,
            param: self.param,
            seed: self.seed,
        })
    }
}

pub fn parse_scenario(text: &str, grid: &Grid) -> Result<AttackScenario, IoError> {
    serde_json::from_str::<ScenarioFile>(text)?.to_scenario(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeValue {
    pub id: NodeId,
    pub value: f64,
}

/// Values for the nodes in `set`, in index order.
pub fn node_values(grid: &Grid, set: &NodeSet, v: &[f64]) -> Vec<NodeValue> {
    set.iter().zip(v).map(|(i, &value)| NodeValue { id: grid.node_id(i), value }).collect()
}

fn full_values(grid: &Grid, v: &DVector<f64>) -> Vec<NodeValue> {
    node_values(grid, &NodeSet::full(grid.node_count()), v.as_slice())
}

/// Dense vector over all nodes from id-keyed records.
pub fn dense_values(grid: &Grid, values: &[NodeValue]) -> Result<DVector<f64>, IoError> {
    let mut out: Vec<Option<f64>> = vec![None; grid.node_count()];
    for r in values {
        let i = grid.node_index(r.id).ok_or(IoError::UnknownNode(r.id))?;
        if out[i].replace(r.value).is_some() {
            return Err(IoError::DuplicateNode(r.id));
        }
    }
    out.iter()
        .enumerate()
        .map(|(i, v)| v.ok_or(IoError::MissingNode(grid.node_id(i))))
        .collect::<Result<Vec<_>, _>>()
        .map(DVector::from_vec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationFile {
    /// Pre-attack angles.
    pub theta: Vec<NodeValue>,
    /// Reported angles after the attack.
    pub theta_obs: Vec<NodeValue>,
    pub p: Vec<NodeValue>,
}

impl ObservationFile {
    pub fn from_observation(grid: &Grid, o: &Observation) -> Self {
        Self { theta: full_values(grid, &o.theta), theta_obs: full_values(grid, &o.theta_obs), p: full_values(grid, &o.p) }
    }

    pub fn to_observation(&self, grid: &Grid) -> Result<Observation, IoError> {
        Ok(Observation {
            theta: dense_values(grid, &self.theta)?,
            theta_obs: dense_values(grid, &self.theta_obs)?,
            p: dense_values(grid, &self.p)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFile {
    pub scenario: ScenarioFile,
    pub theta_post: Vec<NodeValue>,
}

impl GroundTruthFile {
    pub fn from_truth(grid: &Grid, t: &GroundTruth) -> Self {
        Self { scenario: ScenarioFile::from_scenario(grid, &t.scenario), theta_post: full_values(grid, &t.theta_post) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeFile {
    pub success: bool,
    #[serde(rename = "H")]
    pub detected: Vec<NodeId>,
    #[serde(rename = "F")]
    pub failed: Vec<LineId>,
    pub confidence: f64,
    pub iterations: usize,
    pub candidates_tried: usize,
    pub origin: Option<CandidateOrigin>,
    /// Recovered post-attack angles on the detection area.
    pub theta: Vec<NodeValue>,
}

impl OutcomeFile {
    pub fn from_outcome(grid: &Grid, o: &ReactOutcome) -> Self {
        Self {
            success: o.success,
            detected: grid.ids_of(&o.detected),
            failed: grid.line_ids_of(&o.result.failed),
            confidence: o.result.confidence,
            iterations: o.result.iterations,
            candidates_tried: o.candidates_tried,
            origin: o.origin,
            theta: node_values(grid, &o.result.area, o.result.theta.as_slice()),
        }
    }
}

/// Convert a MATPOWER case file to a grid.
///
/// Reads `baseMVA`, the `bus`, `gen` and `branch` matrices. Net injections
/// are `(Pg − Pd) / baseMVA`; the imbalance left by losses is absorbed at the
/// reference (type 3) bus. Out-of-service branches and generators are dropped.
/// Line ids are the 0-based branch row numbers.
pub fn parse_matpower(text: &str) -> Result<Grid, IoError> {
    let mut base = 100.0;
    let mut tables: HashMap<String, Vec<(usize, Vec<f64>)>> = HashMap::new();
    let mut current: Option<String> = None;
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut body = line;
        if current.is_none() {
            let Some(rest) = line.strip_prefix("mpc.") else { continue };
            let Some((name, value)) = rest.split_once('=') else { continue };
            let name = name.trim();
            let value = value.trim();
            if name == "baseMVA" {
                base = value
                    .trim_end_matches(';')
                    .trim()
                    .parse()
                    .map_err(|_| IoError::Matpower { line: ln, msg: format!("bad baseMVA '{value}'") })?;
                continue;
            }
            let Some(open) = value.strip_prefix('[') else { continue };
            if !matches!(name, "bus" | "gen" | "branch") {
                if !open.contains(']') {
                    current = Some(String::new());
                }
                continue;
            }
            tables.insert(name.to_string(), Vec::new());
            current = Some(name.to_string());
            body = open;
        }
        let name = current.clone().expect("inside a matrix");
        let (rows, closed) = match body.split_once(']') {
            Some((r, _)) => (r, true),
            None => (body, false),
        };
        if !name.is_empty() {
            for row in rows.split(';') {
                let row = row.trim();
                if row.is_empty() {
                    continue;
                }
                let nums = row
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| IoError::Matpower { line: ln, msg: format!("non-numeric entry in '{row}'") })?;
                tables.get_mut(&name).expect("table exists").push((ln, nums));
            }
        }
        if closed {
            current = None;
        }
    }

    let need = |name: &str| tables.get(name).ok_or(IoError::Matpower { line: 0, msg: format!("missing mpc.{name}") });
    let col = |row: &(usize, Vec<f64>), c: usize, what: &str| {
        row.1.get(c).copied().ok_or(IoError::Matpower { line: row.0, msg: format!("row has no {what} column") })
    };
    let as_id = |v: f64, ln: usize| {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as NodeId)
        } else {
            Err(IoError::Matpower { line: ln, msg: format!("bus number {v} is not a non-negative integer") })
        }
    };

    let mut ids = Vec::new();
    let mut p: HashMap<NodeId, f64> = HashMap::new();
    let mut reference = None;
    for row in need("bus")? {
        let id = as_id(col(row, 0, "bus_i")?, row.0)?;
        if col(row, 1, "type")? == 3.0 && reference.is_none() {
            reference = Some(id);
        }
        ids.push(id);
        p.insert(id, -col(row, 2, "Pd")?);
    }
    if let Some(gens) = tables.get("gen") {
        for row in gens {
            let bus = as_id(col(row, 0, "bus")?, row.0)?;
            let on = row.1.get(7).is_none_or(|s| *s > 0.0);
            if on {
                *p.get_mut(&bus).ok_or(IoError::UnknownNode(bus))? += col(row, 1, "Pg")?;
            }
        }
    }
    let reference = reference.or(ids.first().copied()).ok_or(IoError::Matpower { line: 0, msg: "no buses".into() })?;
    let total: f64 = p.values().sum();
    *p.get_mut(&reference).expect("reference is a bus") -= total;

    let mut lines = Vec::new();
    for (k, row) in need("branch")?.iter().enumerate() {
        if row.1.get(10).is_some_and(|s| *s <= 0.0) {
            continue;
        }
        let u = as_id(col(row, 0, "fbus")?, row.0)?;
        let v = as_id(col(row, 1, "tbus")?, row.0)?;
        lines.push((k as LineId, u, v, col(row, 3, "x")?));
    }
    let nodes = ids.iter().map(|id| (*id, p[id] / base)).collect();
    Ok(Grid::new(nodes, lines, reference)?)
}
