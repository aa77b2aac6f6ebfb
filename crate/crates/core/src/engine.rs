//! Plan feasibility and one-slot state transitions.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plan::TransmissionPlan;
use crate::session::SessionState;
use crate::topology::ConnectionMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// A user or packet index outside the instance.
    OutOfRange,
    /// The cellular code holds two or more packets some user wants.
    InadmissibleBs,
    /// A D2D code holds two or more packets some receiving neighbor wants.
    InadmissibleD2d,
    /// A D2D code contains a packet its transmitter does not hold.
    NotHeld,
    /// Two transmitters are directly connected.
    Conflict,
    /// Two transmitters share a neighbor.
    Congestion,
    /// A packet is on the cellular code and a D2D code at once.
    Redundancy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn rules(&self) -> BTreeSet<Rule> {
        self.violations.iter().map(|v| v.rule).collect()
    }

    fn push(&mut self, rule: Rule, detail: String) {
        self.violations.push(Violation { rule, detail });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{:?}: {}", v.rule, v.detail))
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

fn wanted_in(state: &SessionState, user: usize, code: &BTreeSet<usize>) -> usize {
    code.iter()
        .filter(|&&p| state.wants(user).contains(p))
        .count()
}

/// Checks a plan against every feasibility rule and reports all violations.
pub fn validate_plan(
    plan: &TransmissionPlan,
    state: &SessionState,
    c: &ConnectionMatrix,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (n, m) = (state.n_users(), state.n_packets());
    if c.n_users() != n {
        report.push(
            Rule::OutOfRange,
            format!("topology has {} users, session {n}", c.n_users()),
        );
        return report;
    }
    for &p in plan.bs_code.iter().chain(plan.d2d_codes.values().flatten()) {
        if p >= m {
            report.push(Rule::OutOfRange, format!("packet index {p} >= {m}"));
        }
    }
    for &tx in plan.d2d_codes.keys() {
        if tx >= n {
            report.push(Rule::OutOfRange, format!("transmitter index {tx} >= {n}"));
        }
    }
    if !report.passed() {
        return report;
    }

    for u in 0..n {
        if wanted_in(state, u, &plan.bs_code) > 1 {
            report.push(
                Rule::InadmissibleBs,
                format!("UE{} wants two or more packets of the cellular code", u + 1),
            );
        }
    }

    let transmitters: Vec<usize> = plan
        .d2d_codes
        .iter()
        .filter(|(_, code)| !code.is_empty())
        .map(|(&tx, _)| tx)
        .collect();
    for &tx in &transmitters {
        let code = &plan.d2d_codes[&tx];
        for &p in code {
            if !state.has(tx).contains(p) {
                report.push(
                    Rule::NotHeld,
                    format!("UE{} does not hold p{}", tx + 1, p + 1),
                );
            }
            if plan.bs_code.contains(&p) {
                report.push(
                    Rule::Redundancy,
                    format!("p{} sent by BS and UE{}", p + 1, tx + 1),
                );
            }
        }
        for k in c.neighbors(tx) {
            if wanted_in(state, k, code) > 1 {
                report.push(
                    Rule::InadmissibleD2d,
                    format!(
                        "UE{} wants two or more packets of UE{}'s code",
                        k + 1,
                        tx + 1
                    ),
                );
            }
        }
    }
    for (x, &i) in transmitters.iter().enumerate() {
        for &j in &transmitters[x + 1..] {
            if c.connected(i, j) {
                report.push(
                    Rule::Conflict,
                    format!("UE{} and UE{} are directly connected", i + 1, j + 1),
                );
            }
            if c.share_neighbor(i, j) {
                report.push(
                    Rule::Congestion,
                    format!("UE{} and UE{} share a neighbor", i + 1, j + 1),
                );
            }
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "link", rename_all = "snake_case")]
pub enum Link {
    Cellular,
    D2d { transmitter: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Recovery {
    pub user: usize,
    pub packet: usize,
    pub source: Link,
}

impl fmt::Display for Recovery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UE{} <- p{} ", self.user + 1, self.packet + 1)?;
        match self.source {
            Link::Cellular => write!(f, "(cellular)"),
            Link::D2d { transmitter } => write!(f, "(d2d from UE{})", transmitter + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotOutcome {
    pub recoveries: Vec<Recovery>,
    pub new_state: SessionState,
}

/// Applies a feasible plan for one slot.
///
/// A user decodes a code when it carries exactly one packet from its Wants
/// set. A transmitting user still hears the BS but never hears D2D while
/// transmitting.
pub fn apply_plan(
    state: &SessionState,
    plan: &TransmissionPlan,
    c: &ConnectionMatrix,
) -> Result<SlotOutcome> {
    let report = validate_plan(plan, state, c);
    if !report.passed() {
        return Err(Error::Infeasible(report));
    }
    let mut recoveries = Vec::new();
    let only_wanted = |user: usize, code: &BTreeSet<usize>| -> Option<usize> {
        let mut wanted = code.iter().filter(|&&p| state.wants(user).contains(p));
        match (wanted.next(), wanted.next()) {
            (Some(&p), None) => Some(p),
            _ => None,
        }
    };
    for u in 0..state.n_users() {
        if let Some(p) = only_wanted(u, &plan.bs_code) {
            recoveries.push(Recovery {
                user: u,
                packet: p,
                source: Link::Cellular,
            });
        }
        if plan.d2d_codes.get(&u).is_some_and(|code| !code.is_empty()) {
            continue;
        }
        // Congestion-freedom leaves at most one transmitter in range.
        let heard = plan
            .d2d_codes
            .iter()
            .find(|(&tx, code)| !code.is_empty() && c.connected(tx, u));
        if let Some((&tx, code)) = heard {
            if let Some(p) = only_wanted(u, code) {
                recoveries.push(Recovery {
                    user: u,
                    packet: p,
                    source: Link::D2d { transmitter: tx },
                });
            }
        }
    }
    let mut new_state = state.clone();
    for r in &recoveries {
        new_state.deliver(r.user, r.packet);
    }
    Ok(SlotOutcome {
        recoveries,
        new_state,
    })
}
