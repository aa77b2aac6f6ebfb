//! Joint cellular / D2D packet recovery with instantly decodable network
//! coding.
//!
//! The crate models a broadcast session in which users missed some packets
//! of a common content, builds the two-layer conflict graph whose
//! independent sets are exactly the feasible joint transmissions, and
//! schedules recovery slots with a per-slot optimal solver, a polynomial
//! heuristic, or one of two cellular-only baselines. A seeded Monte Carlo
//! harness compares them.

pub mod baselines;
pub mod bitset;
pub mod conflict_graph;
pub mod engine;
pub mod error;
pub mod harness;
pub mod mis;
pub mod netcam_wp;
pub mod opt_idnc;
pub mod plan;
pub mod schedule;
pub mod session;
pub mod topology;

pub use bitset::BitSet;
pub use conflict_graph::{ConflictGraph, EdgeReason, Layer, Transmitter, Vertex};
pub use engine::{apply_plan, validate_plan, Link, Recovery, Rule, SlotOutcome, ValidationReport};
pub use error::{Error, Result};
pub use mis::{MisSolver, VertexSet};
pub use plan::TransmissionPlan;
pub use schedule::{ScheduleResult, SchedulerKind, SlotRecord};
pub use session::{ErasureSpec, SessionState};
pub use topology::{ConnectionMatrix, TopologyKind, TopologySpec};
