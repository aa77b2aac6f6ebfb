//! Packet reception state after the first broadcast stage.
//!
//! The feedback matrix entry `f_mn` is 1 when user `n` holds packet `m`;
//! the Has/Wants sets are the row views of that matrix. Packets and users
//! are 0-based here and 1-based in fixtures (`p1`, `UE1`).

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};

pub const DEFAULT_ERASURE_PROBABILITY: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SessionRepr", into = "SessionRepr")]
pub struct SessionState {
    n_users: usize,
    n_packets: usize,
    has: Vec<BitSet>,
    wants: Vec<BitSet>,
}

#[derive(Serialize, Deserialize)]
struct SessionRepr {
    n_users: usize,
    n_packets: usize,
    has: Vec<Vec<usize>>,
}

impl From<SessionState> for SessionRepr {
    fn from(s: SessionState) -> Self {
        SessionRepr {
            n_users: s.n_users,
            n_packets: s.n_packets,
            has: s.has.iter().map(BitSet::to_vec).collect(),
        }
    }
}

impl TryFrom<SessionRepr> for SessionState {
    type Error = Error;

    fn try_from(r: SessionRepr) -> Result<Self> {
        if r.has.len() != r.n_users {
            return Err(Error::DimensionMismatch(format!(
                "{} has-lists for {} users",
                r.has.len(),
                r.n_users
            )));
        }
        SessionState::from_has_sets(r.n_packets, r.has)
    }
}

impl SessionState {
    /// Builds a state from per-user Has lists (0-based packet indices).
    pub fn from_has_sets<I, P>(n_packets: usize, has: I) -> Result<Self>
    where
        I: IntoIterator<Item = P>,
        P: IntoIterator<Item = usize>,
    {
        let mut sets = Vec::new();
        for packets in has {
            let mut set = BitSet::new(n_packets);
            for p in packets {
                if p >= n_packets {
                    return Err(Error::IndexOutOfRange {
                        what: "packet",
                        index: p,
                        limit: n_packets,
                    });
                }
                set.insert(p);
            }
            sets.push(set);
        }
        if sets.is_empty() || n_packets == 0 {
            return Err(Error::InvalidSpec(
                "user and packet counts must be positive".into(),
            ));
        }
        Ok(Self::from_bitsets(n_packets, sets))
    }

    fn from_bitsets(n_packets: usize, has: Vec<BitSet>) -> Self {
        let all = BitSet::full(n_packets);
        let wants = has.iter().map(|h| all.difference(h)).collect();
        Self {
            n_users: has.len(),
            n_packets,
            has,
            wants,
        }
    }

    /// Builds a state from the packet x user feedback matrix.
    pub fn from_feedback(feedback: &[Vec<bool>]) -> Result<Self> {
        let n_packets = feedback.len();
        let n_users = feedback.first().map_or(0, Vec::len);
        if feedback.iter().any(|row| row.len() != n_users) {
            return Err(Error::DimensionMismatch("ragged feedback matrix".into()));
        }
        Self::from_has_sets(
            n_packets,
            (0..n_users).map(|n| (0..n_packets).filter(move |&m| feedback[m][n])),
        )
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_packets(&self) -> usize {
        self.n_packets
    }

    /// `f_mn`.
    pub fn feedback(&self, packet: usize, user: usize) -> bool {
        self.has[user].contains(packet)
    }

    pub fn feedback_matrix(&self) -> Vec<Vec<bool>> {
        (0..self.n_packets)
            .map(|m| (0..self.n_users).map(|n| self.feedback(m, n)).collect())
            .collect()
    }

    #[inline]
    pub fn has(&self, user: usize) -> &BitSet {
        &self.has[user]
    }

    #[inline]
    pub fn wants(&self, user: usize) -> &BitSet {
        &self.wants[user]
    }

    /// Packets missing at every user; only the BS can send these.
    pub fn s_bs(&self) -> BitSet {
        let mut acc = BitSet::full(self.n_packets);
        for w in &self.wants {
            acc.intersect_with(w);
        }
        acc
    }

    /// Packets missing at one or more users.
    pub fn wanted_anywhere(&self) -> BitSet {
        let mut acc = BitSet::new(self.n_packets);
        for w in &self.wants {
            acc.union_with(w);
        }
        acc
    }

    pub fn demand_count(&self, packet: usize) -> Result<usize> {
        if packet >= self.n_packets {
            return Err(Error::IndexOutOfRange {
                what: "packet",
                index: packet,
                limit: self.n_packets,
            });
        }
        Ok(self.demand(packet))
    }

    #[inline]
    pub(crate) fn demand(&self, packet: usize) -> usize {
        self.wants.iter().filter(|w| w.contains(packet)).count()
    }

    /// Number of users among `users` that want `packet`.
    #[inline]
    pub(crate) fn demand_within(&self, packet: usize, users: &BitSet) -> usize {
        users
            .iter()
            .filter(|&u| self.wants[u].contains(packet))
            .count()
    }

    pub fn total_wants(&self) -> usize {
        self.wants.iter().map(BitSet::count).sum()
    }

    pub fn is_complete(&self) -> bool {
        self.wants.iter().all(BitSet::is_empty)
    }

    /// Marks `packet` as received by `user`.
    pub(crate) fn deliver(&mut self, user: usize, packet: usize) {
        self.has[user].insert(packet);
        self.wants[user].remove(packet);
    }

    /// Serializes to the `packets` / `users` / `has <n>: ...` fixture format.
    pub fn to_text(&self) -> String {
        let mut out = format!("packets {}\nusers {}\n", self.n_packets, self.n_users);
        for (n, h) in self.has.iter().enumerate() {
            let _ = write!(out, "has {}:", n + 1);
            for p in h {
                let _ = write!(out, " {}", p + 1);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut n_packets: Option<usize> = None;
        let mut n_users: Option<usize> = None;
        let mut has: Vec<Option<BitSet>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            let count = |s: &str| -> Result<usize> {
                match s.parse::<usize>() {
                    Ok(v) if v > 0 => Ok(v),
                    _ => Err(err(format!("bad count {s:?}"))),
                }
            };
            if let Some(rest) = line.strip_prefix("packets ") {
                n_packets = Some(count(rest.trim())?);
            } else if let Some(rest) = line.strip_prefix("users ") {
                let n = count(rest.trim())?;
                n_users = Some(n);
                has = vec![None; n];
            } else if let Some(rest) = line.strip_prefix("has ") {
                let (m, n) = match (n_packets, n_users) {
                    (Some(m), Some(n)) => (m, n),
                    _ => return Err(err("has line before packets/users headers".into())),
                };
                let (label, list) = rest
                    .split_once(':')
                    .ok_or_else(|| err("missing ':' after user label".into()))?;
                let user = match label.trim().parse::<usize>() {
                    Ok(u) if (1..=n).contains(&u) => u - 1,
                    _ => return Err(err(format!("bad user label {label:?}"))),
                };
                if has[user].is_some() {
                    return Err(err(format!("duplicate has line for user {}", user + 1)));
                }
                let mut set = BitSet::new(m);
                for tok in list.split_whitespace() {
                    match tok.parse::<usize>() {
                        Ok(p) if (1..=m).contains(&p) => set.insert(p - 1),
                        _ => return Err(err(format!("bad packet label {tok:?}"))),
                    }
                }
                has[user] = Some(set);
            } else {
                return Err(err(format!("unrecognized line {line:?}")));
            }
        }
        let missing = |what: &str| Error::Parse {
            line: 0,
            msg: format!("missing {what}"),
        };
        let m = n_packets.ok_or_else(|| missing("packets header"))?;
        n_users.ok_or_else(|| missing("users header"))?;
        let has = has
            .into_iter()
            .enumerate()
            .map(|(u, h)| h.ok_or_else(|| missing(&format!("has line for user {}", u + 1))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bitsets(m, has))
    }
}

/// First-stage loss model: every (packet, user) entry is erased independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErasureSpec {
    pub erasure_probability: f64,
    pub seed: u64,
}

pub fn generate_feedback(
    n_users: usize,
    n_packets: usize,
    spec: &ErasureSpec,
) -> Result<SessionState> {
    if n_users == 0 || n_packets == 0 {
        return Err(Error::InvalidSpec(
            "user and packet counts must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spec.erasure_probability) {
        return Err(Error::InvalidSpec(format!(
            "erasure probability {} outside [0, 1]",
            spec.erasure_probability
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut has = vec![BitSet::new(n_packets); n_users];
    for m in 0..n_packets {
        for h in has.iter_mut() {
            if !rng.gen_bool(spec.erasure_probability) {
                h.insert(m);
            }
        }
    }
    Ok(SessionState::from_bitsets(n_packets, has))
}
