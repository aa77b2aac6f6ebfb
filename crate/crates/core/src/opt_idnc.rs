//! Per-slot optimal scheduling: each slot transmits a maximum independent
//! set of the current two-layer conflict graph.

use crate::conflict_graph::build_two_layer;
use crate::engine::validate_plan;
use crate::error::{Error, Result};
use crate::mis::MisSolver;
use crate::plan::TransmissionPlan;
use crate::schedule::{drive, ScheduleResult, SchedulerKind};
use crate::session::SessionState;
use crate::topology::ConnectionMatrix;

/// The plan a single slot would use from `state`.
pub fn decide_slot(
    state: &SessionState,
    c: &ConnectionMatrix,
    solver: &MisSolver,
) -> Result<TransmissionPlan> {
    let graph = build_two_layer(state, c)?;
    let mis = solver.solve(&graph)?;
    let plan = graph.decode_independent_set(&mis)?;
    let report = validate_plan(&plan, state, c);
    if !report.passed() {
        return Err(Error::Infeasible(report));
    }
    Ok(plan)
}

pub fn run(state: &SessionState, c: &ConnectionMatrix) -> Result<ScheduleResult> {
    run_with(state, c, &MisSolver::default())
}

pub fn run_with(
    state: &SessionState,
    c: &ConnectionMatrix,
    solver: &MisSolver,
) -> Result<ScheduleResult> {
    drive(SchedulerKind::OptIdnc, state, c, |s| {
        decide_slot(s, c, solver)
    })
}
