use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{apply_plan, SlotOutcome};
use crate::error::{Error, Result};
use crate::mis::MisSolver;
use crate::plan::TransmissionPlan;
use crate::session::SessionState;
use crate::topology::ConnectionMatrix;
use crate::{baselines, netcam_wp, opt_idnc};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub plan: TransmissionPlan,
    pub outcome: SlotOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleResult {
    pub scheduler_id: String,
    pub completion_time: usize,
    pub slots: Vec<SlotRecord>,
}

impl ScheduleResult {
    pub fn final_state<'a>(&'a self, initial: &'a SessionState) -> &'a SessionState {
        self.slots.last().map_or(initial, |s| &s.outcome.new_state)
    }
}

/// Runs `decide` slot by slot until every Wants set is empty. A slot that
/// recovers nothing is an error, so the loop always terminates.
pub(crate) fn drive<F>(
    scheduler: SchedulerKind,
    state: &SessionState,
    c: &ConnectionMatrix,
    mut decide: F,
) -> Result<ScheduleResult>
where
    F: FnMut(&SessionState) -> Result<TransmissionPlan>,
{
    let mut slots: Vec<SlotRecord> = Vec::new();
    let mut current = state.clone();
    while !current.is_complete() {
        let plan = decide(&current)?;
        let outcome = apply_plan(&current, &plan, c)?;
        if outcome.recoveries.is_empty() {
            return Err(Error::NoProgress {
                scheduler: scheduler.id(),
                slot: slots.len() + 1,
            });
        }
        current = outcome.new_state.clone();
        slots.push(SlotRecord { plan, outcome });
    }
    Ok(ScheduleResult {
        scheduler_id: scheduler.id().to_string(),
        completion_time: slots.len(),
        slots,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerKind {
    OptIdnc,
    NetcamWp,
    UncodedBs,
    CellularOnlyIdnc,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 4] = [
        SchedulerKind::OptIdnc,
        SchedulerKind::NetcamWp,
        SchedulerKind::UncodedBs,
        SchedulerKind::CellularOnlyIdnc,
    ];

    pub fn id(self) -> &'static str {
        match self {
            SchedulerKind::OptIdnc => "opt-idnc",
            SchedulerKind::NetcamWp => "netcam-wp",
            SchedulerKind::UncodedBs => "uncoded-bs",
            SchedulerKind::CellularOnlyIdnc => "cellular-only-idnc",
        }
    }

    pub fn run(
        self,
        state: &SessionState,
        c: &ConnectionMatrix,
        solver: &MisSolver,
    ) -> Result<ScheduleResult> {
        match self {
            SchedulerKind::OptIdnc => opt_idnc::run_with(state, c, solver),
            SchedulerKind::NetcamWp => netcam_wp::run(state, c),
            SchedulerKind::UncodedBs => baselines::run_uncoded_bs(state, c),
            SchedulerKind::CellularOnlyIdnc => {
                baselines::run_cellular_only_idnc_with(state, c, solver)
            }
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchedulerKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheduler {s:?}")))
    }
}
