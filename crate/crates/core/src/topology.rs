//! D2D connectivity: connection matrix, coverage areas and generators.
//!
//! Users are indexed from 0 internally. The text fixture format and every
//! human-facing label use 1-based indices (`UE1`, `UE2`, ...).

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};

pub const DEFAULT_EDGE_PROBABILITY: f64 = 0.3;

/// Symmetric, zero-diagonal single-hop adjacency between users.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionMatrix {
    n_users: usize,
    rows: Vec<BitSet>,
}

impl ConnectionMatrix {
    /// Matrix with no D2D links.
    pub fn disconnected(n_users: usize) -> Self {
        Self {
            n_users,
            rows: vec![BitSet::new(n_users); n_users],
        }
    }

    pub fn fully_connected(n_users: usize) -> Self {
        let mut c = Self::disconnected(n_users);
        for j in 0..n_users {
            for k in j + 1..n_users {
                c.link(j, k);
            }
        }
        c
    }

    /// Builds a matrix from undirected 0-based edges. Self-loops are rejected.
    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(
        n_users: usize,
        edges: I,
    ) -> Result<Self> {
        let mut c = Self::disconnected(n_users);
        for (j, k) in edges {
            for u in [j, k] {
                if u >= n_users {
                    return Err(Error::IndexOutOfRange {
                        what: "user",
                        index: u,
                        limit: n_users,
                    });
                }
            }
            if j == k {
                return Err(Error::InvalidSpec(format!("self-loop on user {}", j + 1)));
            }
            c.link(j, k);
        }
        Ok(c)
    }

    fn link(&mut self, j: usize, k: usize) {
        self.rows[j].insert(k);
        self.rows[k].insert(j);
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    /// Entry `c_jk`.
    pub fn connected(&self, j: usize, k: usize) -> bool {
        self.rows[j].contains(k)
    }

    /// Coverage area of `user`: every directly connected neighbor.
    pub fn coverage_area(&self, user: usize) -> Result<&BitSet> {
        self.rows.get(user).ok_or(Error::IndexOutOfRange {
            what: "user",
            index: user,
            limit: self.n_users,
        })
    }

    /// Unchecked variant of [`coverage_area`](Self::coverage_area) for hot loops.
    #[inline]
    pub fn neighbors(&self, user: usize) -> &BitSet {
        &self.rows[user]
    }

    pub fn singleton_users(&self) -> BitSet {
        BitSet::from_indices(
            self.n_users,
            (0..self.n_users).filter(|&u| self.rows[u].is_empty()),
        )
    }

    /// Undirected edges `(j, k)` with `j < k`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n_users)
            .flat_map(|j| {
                self.rows[j]
                    .iter()
                    .filter(move |&k| k > j)
                    .map(move |k| (j, k))
            })
            .collect()
    }

    pub fn share_neighbor(&self, j: usize, k: usize) -> bool {
        self.rows[j].intersects(&self.rows[k])
    }

    /// Serializes to the `users <N>` / `edge <j> <k>` text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("users {}\n", self.n_users);
        for (j, k) in self.edges() {
            let _ = writeln!(out, "edge {} {}", j + 1, k + 1);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut n_users = None;
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                ["users", n] => {
                    let n: usize = n
                        .parse()
                        .map_err(|_| parse_err(format!("bad user count {n:?}")))?;
                    if n == 0 {
                        return Err(parse_err("user count must be positive".into()));
                    }
                    n_users = Some(n);
                }
                ["edge", j, k] => {
                    let n = n_users.ok_or_else(|| parse_err("edge before users header".into()))?;
                    let parse_user = |s: &str| -> Result<usize> {
                        match s.parse::<usize>() {
                            Ok(u) if (1..=n).contains(&u) => Ok(u - 1),
                            _ => Err(parse_err(format!("bad user label {s:?}"))),
                        }
                    };
                    let (j, k) = (parse_user(j)?, parse_user(k)?);
                    if j == k {
                        return Err(parse_err("self-loop".into()));
                    }
                    edges.push((j, k));
                }
                _ => return Err(parse_err(format!("unrecognized line {line:?}"))),
            }
        }
        let n = n_users.ok_or(Error::Parse {
            line: 0,
            msg: "missing users header".into(),
        })?;
        Self::from_edges(n, edges)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologyKind {
    FullyConnected,
    RandomUniform { edge_probability: f64 },
}

impl Default for TopologyKind {
    fn default() -> Self {
        TopologyKind::RandomUniform {
            edge_probability: DEFAULT_EDGE_PROBABILITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub n_users: usize,
    pub kind: TopologyKind,
    pub seed: u64,
}

impl TopologySpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 {
            return Err(Error::InvalidSpec("n_users must be positive".into()));
        }
        if let TopologyKind::RandomUniform { edge_probability } = self.kind {
            if !(0.0..=1.0).contains(&edge_probability) {
                return Err(Error::InvalidSpec(format!(
                    "edge probability {edge_probability} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Generates a connection matrix. Random topologies draw every unordered
/// pair independently from a generator seeded with `spec.seed`.
pub fn generate(spec: &TopologySpec) -> Result<ConnectionMatrix> {
    spec.validate()?;
    let n = spec.n_users;
    match spec.kind {
        TopologyKind::FullyConnected => Ok(ConnectionMatrix::fully_connected(n)),
        TopologyKind::RandomUniform { edge_probability } => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut c = ConnectionMatrix::disconnected(n);
            for j in 0..n {
                for k in j + 1..n {
                    if rng.gen_bool(edge_probability) {
                        c.link(j, k);
                    }
                }
            }
            Ok(c)
        }
    }
}
