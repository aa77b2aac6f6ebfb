//! Most-wanted-packet heuristic scheduler with concurrent D2D transmitters.
//!
//! Each slot picks the cellular code in one of three phases:
//!
//! 1. while some packet is missing at every user (`S_BS`), the BS sends the
//!    lowest-index such packet uncoded;
//! 2. otherwise, while a singleton user still misses packets, the BS codes
//!    the most wanted singleton packet with a greedy instantly decodable
//!    companion set;
//! 3. otherwise the BS codes the most wanted packet(s) greedily and keeps
//!    the largest code, then the one with most receivers.
//!
//! In every phase the D2D side picks the most wanted packet outside the
//! cellular code, the holder with most in-coverage demand for it, and then
//! greedily adds transmitters that neither conflict nor congest.
//!
//! All ties fall through demand, then receiver count, then lowest index.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::plan::TransmissionPlan;
use crate::schedule::{drive, ScheduleResult, SchedulerKind};
use crate::session::SessionState;
use crate::topology::ConnectionMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    DrainSBs,
    ServeSingletons,
    MostWanted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicSlotDecision {
    pub phase: Phase,
    pub plan: TransmissionPlan,
    /// Packets on the cellular code; the D2D side never carries them.
    pub excluded_packets: BTreeSet<usize>,
}

/// Elementary operation counter used to check per-slot work stays polynomial.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct WorkCounter(pub u64);

impl WorkCounter {
    #[inline]
    fn tick(&mut self, n: usize) {
        self.0 += n as u64;
    }
}

/// Lexicographic ranking key whose last component prefers the lowest index.
type Rank = (usize, usize, Reverse<usize>);

fn to_btree(set: &BitSet) -> BTreeSet<usize> {
    set.iter().collect()
}

/// Packet outside `exclude` with the largest demand; ties go to the lowest
/// index. `None` when nothing outside `exclude` is wanted.
pub fn most_wanted(state: &SessionState, exclude: &BTreeSet<usize>) -> Option<usize> {
    (0..state.n_packets())
        .filter(|p| !exclude.contains(p))
        .map(|p| (state.demand(p), p))
        .filter(|&(d, _)| d > 0)
        .max_by_key(|&(d, p)| (d, Reverse(p)))
        .map(|(_, p)| p)
}

/// Grows `{seed}` into a code that stays instantly decodable for every user
/// in `receivers`, scanning `candidates` in the given order.
fn grow_code(
    state: &SessionState,
    receivers: &BitSet,
    seed: usize,
    candidates: &[usize],
    work: &mut WorkCounter,
) -> BitSet {
    let mut code = BitSet::new(state.n_packets());
    code.insert(seed);
    // Receivers that already see one wanted packet in the code.
    let mut saturated = BitSet::from_indices(
        state.n_users(),
        receivers.iter().filter(|&u| state.wants(u).contains(seed)),
    );
    for &p in candidates {
        work.tick(receivers.count());
        let wanting: Vec<usize> = receivers
            .iter()
            .filter(|&u| state.wants(u).contains(p))
            .collect();
        if wanting.iter().all(|&u| !saturated.contains(u)) {
            code.insert(p);
            for u in wanting {
                saturated.insert(u);
            }
        }
    }
    code
}

/// Users in `users` with exactly one wanted packet in `code`.
fn receiver_count(
    state: &SessionState,
    users: &BitSet,
    code: &BitSet,
    work: &mut WorkCounter,
) -> usize {
    work.tick(users.count());
    users
        .iter()
        .filter(|&u| state.wants(u).intersection_count(code) == 1)
        .count()
}

/// Cellular code around `seed`: other wanted packets in descending demand,
/// ties by index, kept when every user can still decode.
fn cellular_code(state: &SessionState, seed: usize, work: &mut WorkCounter) -> BitSet {
    let all = BitSet::full(state.n_users());
    let mut order: Vec<(usize, usize)> = (0..state.n_packets())
        .filter(|&p| p != seed)
        .map(|p| (state.demand(p), p))
        .filter(|&(d, _)| d > 0)
        .collect();
    work.tick(state.n_packets() * state.n_users());
    order.sort_by_key(|&(d, p)| (Reverse(d), p));
    let order: Vec<usize> = order.into_iter().map(|(_, p)| p).collect();
    grow_code(state, &all, seed, &order, work)
}

/// Greedy D2D code for `transmitter` starting from `seed_packet`.
///
/// Scans the transmitter's other held packets outside `exclude` in
/// descending in-coverage demand (ties by index) and keeps each one that
/// leaves the code instantly decodable for every neighbor.
pub fn build_d2d_code(
    state: &SessionState,
    c: &ConnectionMatrix,
    transmitter: usize,
    seed_packet: usize,
    exclude: &BTreeSet<usize>,
) -> Result<BTreeSet<usize>> {
    if transmitter >= state.n_users() || seed_packet >= state.n_packets() {
        return Err(Error::InvalidArgument(
            "transmitter or packet out of range".into(),
        ));
    }
    if !state.has(transmitter).contains(seed_packet) || exclude.contains(&seed_packet) {
        return Err(Error::InvalidArgument(format!(
            "seed p{} must be held by UE{} and not excluded",
            seed_packet + 1,
            transmitter + 1
        )));
    }
    let mut work = WorkCounter::default();
    Ok(to_btree(&d2d_code(
        state,
        c,
        transmitter,
        seed_packet,
        exclude,
        &mut work,
    )))
}

fn d2d_code(
    state: &SessionState,
    c: &ConnectionMatrix,
    transmitter: usize,
    seed: usize,
    exclude: &BTreeSet<usize>,
    work: &mut WorkCounter,
) -> BitSet {
    let nbrs = c.neighbors(transmitter);
    let mut order: Vec<(usize, usize)> = state
        .has(transmitter)
        .iter()
        .filter(|&p| p != seed && !exclude.contains(&p))
        .map(|p| (state.demand_within(p, nbrs), p))
        .filter(|&(d, _)| d > 0)
        .collect();
    work.tick(state.n_packets() * nbrs.count());
    order.sort_by_key(|&(d, p)| (Reverse(d), p));
    let order: Vec<usize> = order.into_iter().map(|(_, p)| p).collect();
    grow_code(state, nbrs, seed, &order, work)
}

/// Holder of `packet` best placed to send it over D2D: most wanting
/// neighbors, then most receivers for its greedy code, then lowest index.
pub fn select_transmitter(
    state: &SessionState,
    c: &ConnectionMatrix,
    packet: usize,
    exclude: &BTreeSet<usize>,
) -> Option<usize> {
    select_transmitter_counted(state, c, packet, exclude, &mut WorkCounter::default())
}

fn select_transmitter_counted(
    state: &SessionState,
    c: &ConnectionMatrix,
    packet: usize,
    exclude: &BTreeSet<usize>,
    work: &mut WorkCounter,
) -> Option<usize> {
    if packet >= state.n_packets() || exclude.contains(&packet) {
        return None;
    }
    let mut best: Option<(Rank, usize)> = None;
    for i in 0..state.n_users() {
        if !state.has(i).contains(packet) {
            continue;
        }
        let nbrs = c.neighbors(i);
        work.tick(nbrs.count());
        let demand = state.demand_within(packet, nbrs);
        if demand == 0 {
            continue;
        }
        let code = d2d_code(state, c, i, packet, exclude, work);
        let key = (demand, receiver_count(state, nbrs, &code, work), Reverse(i));
        if best.as_ref().is_none_or(|(k, _)| key > *k) {
            best = Some((key, i));
        }
    }
    best.map(|(_, i)| i)
}

/// Held packet outside `exclude` with most wanting neighbors, if any.
fn best_local_packet(
    state: &SessionState,
    c: &ConnectionMatrix,
    user: usize,
    exclude: &BTreeSet<usize>,
    work: &mut WorkCounter,
) -> Option<(usize, usize)> {
    let nbrs = c.neighbors(user);
    work.tick(state.n_packets() * nbrs.count());
    state
        .has(user)
        .iter()
        .filter(|p| !exclude.contains(p))
        .map(|p| (state.demand_within(p, nbrs), p))
        .filter(|&(d, _)| d > 0)
        .max_by_key(|&(d, p)| (d, Reverse(p)))
}

/// Extends the first D2D transmitter with every other user that can send
/// in the same slot without conflict or congestion.
pub fn schedule_concurrent(
    state: &SessionState,
    c: &ConnectionMatrix,
    first: (usize, BTreeSet<usize>),
    exclude: &BTreeSet<usize>,
) -> BTreeMap<usize, BTreeSet<usize>> {
    let mut work = WorkCounter::default();
    let n = state.n_packets();
    let first_code = BitSet::from_indices(n, first.1.iter().copied().filter(|&p| p < n));
    concurrent(state, c, first.0, first_code, exclude, &mut work)
        .into_iter()
        .map(|(u, code)| (u, to_btree(&code)))
        .collect()
}

fn concurrent(
    state: &SessionState,
    c: &ConnectionMatrix,
    first_tx: usize,
    first_code: BitSet,
    exclude: &BTreeSet<usize>,
    work: &mut WorkCounter,
) -> BTreeMap<usize, BitSet> {
    let mut chosen = BTreeMap::from([(first_tx, first_code)]);
    let mut candidates: Vec<(usize, usize, usize)> = (0..state.n_users())
        .filter(|&j| j != first_tx)
        .filter_map(|j| best_local_packet(state, c, j, exclude, work).map(|(d, p)| (d, j, p)))
        .collect();
    candidates.sort_by_key(|&(d, j, _)| (Reverse(d), j));
    for (_, j, seed) in candidates {
        work.tick(chosen.len());
        let clash = chosen
            .keys()
            .any(|&s| c.connected(j, s) || c.share_neighbor(j, s));
        if clash {
            continue;
        }
        let code = d2d_code(state, c, j, seed, exclude, work);
        chosen.insert(j, code);
    }
    chosen
}

/// D2D half of a slot given the packets already on the cellular code.
fn d2d_side(
    state: &SessionState,
    c: &ConnectionMatrix,
    exclude: &BTreeSet<usize>,
    work: &mut WorkCounter,
) -> BTreeMap<usize, BitSet> {
    let mut order: Vec<(usize, usize)> = (0..state.n_packets())
        .filter(|p| !exclude.contains(p))
        .map(|p| (state.demand(p), p))
        .filter(|&(d, _)| d > 0)
        .collect();
    work.tick(state.n_packets() * state.n_users());
    order.sort_by_key(|&(d, p)| (Reverse(d), p));
    for (_, p) in order {
        if let Some(tx) = select_transmitter_counted(state, c, p, exclude, work) {
            let code = d2d_code(state, c, tx, p, exclude, work);
            return concurrent(state, c, tx, code, exclude, work);
        }
    }
    BTreeMap::new()
}

/// Decides one slot.
pub fn decide_slot(state: &SessionState, c: &ConnectionMatrix) -> Result<HeuristicSlotDecision> {
    let mut work = WorkCounter::default();
    decide_slot_counted(state, c, &c.singleton_users(), &mut work)
}

fn decide_slot_counted(
    state: &SessionState,
    c: &ConnectionMatrix,
    singletons: &BitSet,
    work: &mut WorkCounter,
) -> Result<HeuristicSlotDecision> {
    if state.n_users() != c.n_users() {
        return Err(Error::DimensionMismatch(format!(
            "session has {} users, topology has {}",
            state.n_users(),
            c.n_users()
        )));
    }
    let s_bs = state.s_bs();
    let mut singleton_wants = BitSet::new(state.n_packets());
    for u in singletons {
        singleton_wants.union_with(state.wants(u));
    }
    work.tick(state.n_packets() * state.n_users());

    let (phase, cellular) = if let Some(p) = s_bs.first() {
        (
            Phase::DrainSBs,
            BitSet::from_indices(state.n_packets(), [p]),
        )
    } else if !singleton_wants.is_empty() {
        let p_single = singleton_wants
            .iter()
            .max_by_key(|&p| (state.demand(p), Reverse(p)))
            .expect("nonempty");
        (Phase::ServeSingletons, cellular_code(state, p_single, work))
    } else {
        let top = (0..state.n_packets())
            .map(|p| state.demand(p))
            .max()
            .unwrap_or(0);
        let mut best: Option<(Rank, BitSet)> = None;
        for p in (0..state.n_packets()).filter(|&p| top > 0 && state.demand(p) == top) {
            let code = cellular_code(state, p, work);
            let all = BitSet::full(state.n_users());
            let key = (
                code.count(),
                receiver_count(state, &all, &code, work),
                Reverse(p),
            );
            if best.as_ref().is_none_or(|(k, _)| key > *k) {
                best = Some((key, code));
            }
        }
        let code = best
            .map(|(_, code)| code)
            .unwrap_or_else(|| BitSet::new(state.n_packets()));
        (Phase::MostWanted, code)
    };

    let excluded = to_btree(&cellular);
    let d2d = d2d_side(state, c, &excluded, work);
    let plan = TransmissionPlan {
        bs_code: excluded.clone(),
        d2d_codes: d2d.iter().map(|(&u, code)| (u, to_btree(code))).collect(),
    };
    Ok(HeuristicSlotDecision {
        phase,
        plan,
        excluded_packets: excluded,
    })
}

pub fn run(state: &SessionState, c: &ConnectionMatrix) -> Result<ScheduleResult> {
    run_detailed(state, c).map(|(r, _, _)| r)
}

/// Runs the heuristic and also returns each slot's decision and the
/// per-slot operation counts.
pub fn run_detailed(
    state: &SessionState,
    c: &ConnectionMatrix,
) -> Result<(ScheduleResult, Vec<HeuristicSlotDecision>, Vec<WorkCounter>)> {
    let singletons = c.singleton_users();
    let mut decisions = Vec::new();
    let mut work_log = Vec::new();
    let result = drive(SchedulerKind::NetcamWp, state, c, |s| {
        let mut work = WorkCounter::default();
        let d = decide_slot_counted(s, c, &singletons, &mut work)?;
        let plan = d.plan.clone();
        decisions.push(d);
        work_log.push(work);
        Ok(plan)
    })?;
    Ok((result, decisions, work_log))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionBounds {
    pub lower: usize,
    pub upper: usize,
}

/// Analytic slot-count bounds for the heuristic.
///
/// `lower = |S_BS|`; `upper = |S_BS ∪ W_single| + ceil(|W_n* \ (S_BS ∪ W_single)| / 2)`
/// where `W_single` is the union of singleton Wants sets and `n*` is the
/// first user with the largest Wants set.
pub fn completion_bounds(state: &SessionState, c: &ConnectionMatrix) -> Result<CompletionBounds> {
    if state.n_users() != c.n_users() {
        return Err(Error::DimensionMismatch(format!(
            "session has {} users, topology has {}",
            state.n_users(),
            c.n_users()
        )));
    }
    let s_bs = state.s_bs();
    let mut bs_only = s_bs.clone();
    for u in &c.singleton_users() {
        bs_only.union_with(state.wants(u));
    }
    let n_star = (0..state.n_users())
        .max_by_key(|&u| (state.wants(u).count(), Reverse(u)))
        .expect("at least one user");
    let rest = state.wants(n_star).difference(&bs_only).count();
    Ok(CompletionBounds {
        lower: s_bs.count(),
        upper: bs_only.count() + rest.div_ceil(2),
    })
}
