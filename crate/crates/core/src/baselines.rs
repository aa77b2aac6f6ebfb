//! Reference schedulers: uncoded BS retransmission and cellular-only IDNC.

use crate::conflict_graph::build_higher_layer;
use crate::error::Result;
use crate::mis::MisSolver;
use crate::plan::TransmissionPlan;
use crate::schedule::{drive, ScheduleResult, SchedulerKind};
use crate::session::SessionState;
use crate::topology::ConnectionMatrix;

/// One uncoded packet per slot: the lowest-index packet anyone still wants.
pub fn run_uncoded_bs(state: &SessionState, c: &ConnectionMatrix) -> Result<ScheduleResult> {
    drive(SchedulerKind::UncodedBs, state, c, |s| {
        Ok(TransmissionPlan::cellular(s.wanted_anywhere().first()))
    })
}

pub fn run_cellular_only_idnc(
    state: &SessionState,
    c: &ConnectionMatrix,
) -> Result<ScheduleResult> {
    run_cellular_only_idnc_with(state, c, &MisSolver::default())
}

/// Per-slot maximum independent set of the higher-layer graph, BS only.
pub fn run_cellular_only_idnc_with(
    state: &SessionState,
    c: &ConnectionMatrix,
    solver: &MisSolver,
) -> Result<ScheduleResult> {
    drive(SchedulerKind::CellularOnlyIdnc, state, c, |s| {
        let graph = build_higher_layer(s);
        let mis = solver.solve(&graph)?;
        graph.decode_independent_set(&mis)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::fixtures::{example1, example2};

    #[test]
    fn uncoded_examples() {
        let c1 = ConnectionMatrix::fully_connected(3);
        assert_eq!(run_uncoded_bs(&example1(), &c1).unwrap().completion_time, 4);
        let c2 = ConnectionMatrix::from_edges(4, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(run_uncoded_bs(&example2(), &c2).unwrap().completion_time, 3);
        let done = SessionState::from_has_sets(1, vec![vec![0]]).unwrap();
        assert_eq!(
            run_uncoded_bs(&done, &ConnectionMatrix::disconnected(1))
                .unwrap()
                .completion_time,
            0
        );
    }

    #[test]
    fn cellular_only_examples() {
        let c1 = ConnectionMatrix::fully_connected(3);
        let r = run_cellular_only_idnc(&example1(), &c1).unwrap();
        assert_eq!(r.completion_time, 2);
        assert!(r.slots.iter().all(|s| s.plan.d2d_codes.is_empty()));
        assert_eq!(r.slots[0].plan, TransmissionPlan::cellular([0, 1]));
        let c2 = ConnectionMatrix::from_edges(4, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(
            run_cellular_only_idnc(&example2(), &c2)
                .unwrap()
                .completion_time,
            2
        );
        let done = SessionState::from_has_sets(1, vec![vec![0]]).unwrap();
        assert_eq!(
            run_cellular_only_idnc(&done, &ConnectionMatrix::disconnected(1))
                .unwrap()
                .completion_time,
            0
        );
    }
}
