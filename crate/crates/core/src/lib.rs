//! Simulation and detection of combined cyber-physical attacks on power grids
//! under the DC power-flow model.
//!
//! An adversary opens lines inside an area and masks the outage by distorting
//! or replaying the phase angles reported from that area. This crate
//! simulates such attacks and recovers the attacked area, the failed lines
//! and the true angles from the pre-attack state and the observed angles.

pub mod atac;
pub mod attack;
pub mod detection;
pub mod grid;
pub mod harness;
pub mod io;
pub mod lp;
pub mod synth;
pub mod tol;
pub mod verify;

pub use grid::{Grid, GridError, Line, LineId, NodeId, NodeSet};
pub use tol::Tolerances;
