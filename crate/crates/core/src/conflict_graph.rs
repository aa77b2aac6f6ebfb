//! Higher-layer, lower-layer and two-layer IDNC conflict graphs.
//!
//! Independent sets of the two-layer graph correspond one-to-one with joint
//! cellular/D2D transmission plans that avoid inadmissibility, conflict,
//! congestion and redundancy.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::plan::TransmissionPlan;
use crate::session::SessionState;
use crate::topology::ConnectionMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Transmitter {
    Bs,
    User(usize),
}

/// A candidate (transmitter, packet) pair. The derived ordering puts the BS
/// layer first by packet, then the user layer by (user, packet).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex {
    pub transmitter: Transmitter,
    pub packet: usize,
}

impl Vertex {
    pub fn bs(packet: usize) -> Self {
        Self {
            transmitter: Transmitter::Bs,
            packet,
        }
    }

    pub fn user(user: usize, packet: usize) -> Self {
        Self {
            transmitter: Transmitter::User(user),
            packet,
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.transmitter {
            Transmitter::Bs => write!(f, "BS:p{}", self.packet + 1),
            Transmitter::User(u) => write!(f, "u{}:p{}", u + 1, self.packet + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeReason {
    /// Two BS packets wanted together by some user.
    InadmissibleBs,
    /// Same D2D transmitter, two packets wanted together by one of its neighbors.
    C1,
    /// Distinct transmitters sharing a neighbor (congestion).
    C2,
    /// Distinct transmitters directly connected (conflict).
    C3,
    /// Same packet on the cellular and a D2D link.
    Redundancy,
}

impl EdgeReason {
    const ALL: [EdgeReason; 5] = [
        EdgeReason::InadmissibleBs,
        EdgeReason::C1,
        EdgeReason::C2,
        EdgeReason::C3,
        EdgeReason::Redundancy,
    ];

    fn bit(self) -> u8 {
        1 << self as u8
    }

    pub fn tag(self) -> &'static str {
        match self {
            EdgeReason::InadmissibleBs => "inadmissible_bs",
            EdgeReason::C1 => "C1",
            EdgeReason::C2 => "C2",
            EdgeReason::C3 => "C3",
            EdgeReason::Redundancy => "redundancy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Higher,
    Lower,
    Two,
}

#[derive(Debug, Clone)]
pub struct ConflictGraph {
    n_users: usize,
    n_packets: usize,
    vertices: Vec<Vertex>,
    adjacency: Vec<BitSet>,
    // Flattened |V| x |V| reason bitmask; symmetric.
    reasons: Vec<u8>,
}

impl ConflictGraph {
    fn with_vertices(n_users: usize, n_packets: usize, vertices: Vec<Vertex>) -> Self {
        let v = vertices.len();
        Self {
            n_users,
            n_packets,
            adjacency: vec![BitSet::new(v); v],
            reasons: vec![0; v * v],
            vertices,
        }
    }

    /// Graph over an explicit vertex list with raw 0-based edges; every edge
    /// is tagged `reason`. Used for solver tests and generic graphs.
    pub fn from_edges(
        n_vertices: usize,
        edges: &[(usize, usize)],
        reason: EdgeReason,
    ) -> Result<Self> {
        let vertices = (0..n_vertices).map(Vertex::bs).collect();
        let mut g = Self::with_vertices(0, n_vertices, vertices);
        for &(a, b) in edges {
            if a >= n_vertices || b >= n_vertices {
                return Err(Error::IndexOutOfRange {
                    what: "vertex",
                    index: a.max(b),
                    limit: n_vertices,
                });
            }
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop on vertex {a}")));
            }
            g.add_edge(a, b, reason);
        }
        Ok(g)
    }

    fn add_edge(&mut self, a: usize, b: usize, reason: EdgeReason) {
        debug_assert_ne!(a, b);
        let v = self.vertices.len();
        self.adjacency[a].insert(b);
        self.adjacency[b].insert(a);
        self.reasons[a * v + b] |= reason.bit();
        self.reasons[b * v + a] |= reason.bit();
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_packets(&self) -> usize {
        self.n_packets
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, idx: usize) -> Vertex {
        self.vertices[idx]
    }

    pub fn index_of(&self, v: &Vertex) -> Option<usize> {
        self.vertices.binary_search(v).ok()
    }

    #[inline]
    pub fn neighbors(&self, idx: usize) -> &BitSet {
        &self.adjacency[idx]
    }

    #[inline]
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].contains(b)
    }

    pub fn edge_reasons(&self, a: usize, b: usize) -> Vec<EdgeReason> {
        let mask = self.reasons[a * self.vertices.len() + b];
        EdgeReason::ALL
            .into_iter()
            .filter(|r| mask & r.bit() != 0)
            .collect()
    }

    /// Undirected edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|a| {
                self.adjacency[a]
                    .iter()
                    .filter(move |&b| b > a)
                    .map(move |b| (a, b))
            })
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BitSet::count).sum::<usize>() / 2
    }

    pub fn empty_set(&self) -> BitSet {
        BitSet::new(self.len())
    }

    /// Vertex set from explicit vertices; fails if one is not in the graph.
    pub fn set_of(&self, vertices: &[Vertex]) -> Result<BitSet> {
        let mut s = self.empty_set();
        for v in vertices {
            let idx = self
                .index_of(v)
                .ok_or_else(|| Error::InvalidArgument(format!("{v} is not a vertex")))?;
            s.insert(idx);
        }
        Ok(s)
    }

    /// First edge inside `set`, if any.
    pub fn violating_edge(&self, set: &BitSet) -> Option<(usize, usize)> {
        set.iter().find_map(|a| {
            self.adjacency[a]
                .intersection(set)
                .iter()
                .find(|&b| b > a)
                .map(|b| (a, b))
        })
    }

    /// Maps any vertex subset to the plan it encodes, without checking
    /// independence.
    pub fn plan_of(&self, set: &BitSet) -> TransmissionPlan {
        let mut plan = TransmissionPlan::idle();
        for idx in set {
            let v = self.vertices[idx];
            match v.transmitter {
                Transmitter::Bs => {
                    plan.bs_code.insert(v.packet);
                }
                Transmitter::User(u) => {
                    plan.d2d_codes.entry(u).or_default().insert(v.packet);
                }
            }
        }
        plan
    }

    /// Decodes an independent set into a transmission plan.
    pub fn decode_independent_set(&self, set: &BitSet) -> Result<TransmissionPlan> {
        if set.capacity() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "vertex set over {} vertices, graph has {}",
                set.capacity(),
                self.len()
            )));
        }
        if let Some((a, b)) = self.violating_edge(set) {
            return Err(Error::NotIndependent(a, b));
        }
        Ok(self.plan_of(set))
    }

    /// Inverse of [`plan_of`](Self::plan_of): every (transmitter, packet)
    /// pair in the plan must be a vertex.
    pub fn encode_plan(&self, plan: &TransmissionPlan) -> Result<BitSet> {
        let mut vs: Vec<Vertex> = plan.bs_code.iter().map(|&p| Vertex::bs(p)).collect();
        for (&u, code) in &plan.d2d_codes {
            vs.extend(code.iter().map(|&p| Vertex::user(u, p)));
        }
        self.set_of(&vs)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph idnc {\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(out, "  n{i} [label=\"{v}\"];");
        }
        for (a, b) in self.edges() {
            let tags: Vec<&str> = self.edge_reasons(a, b).iter().map(|r| r.tag()).collect();
            let _ = writeln!(out, "  n{a} -- n{b} [label=\"{}\"];", tags.join(","));
        }
        out.push_str("}\n");
        out
    }
}

fn check_dims(state: &SessionState, c: &ConnectionMatrix) -> Result<()> {
    if state.n_users() != c.n_users() {
        return Err(Error::DimensionMismatch(format!(
            "session has {} users, topology has {}",
            state.n_users(),
            c.n_users()
        )));
    }
    Ok(())
}

fn higher_vertices(state: &SessionState) -> Vec<Vertex> {
    state.wanted_anywhere().iter().map(Vertex::bs).collect()
}

fn lower_vertices(state: &SessionState, c: &ConnectionMatrix) -> Vec<Vertex> {
    let mut out = Vec::new();
    for i in 0..state.n_users() {
        let mut wanted_nearby = BitSet::new(state.n_packets());
        for k in c.neighbors(i) {
            wanted_nearby.union_with(state.wants(k));
        }
        wanted_nearby.intersect_with(state.has(i));
        out.extend(wanted_nearby.iter().map(|l| Vertex::user(i, l)));
    }
    out
}

/// `lookup[packet] = vertex index` for the BS layer.
fn bs_index(g: &ConflictGraph) -> Vec<Option<usize>> {
    let mut lookup = vec![None; g.n_packets];
    for (idx, v) in g.vertices.iter().enumerate() {
        if v.transmitter == Transmitter::Bs {
            lookup[v.packet] = Some(idx);
        }
    }
    lookup
}

fn add_higher_edges(g: &mut ConflictGraph, state: &SessionState) {
    let lookup = bs_index(g);
    for k in 0..state.n_users() {
        let wanted: Vec<usize> = state.wants(k).to_vec();
        for (x, &p) in wanted.iter().enumerate() {
            for &q in &wanted[x + 1..] {
                if let (Some(a), Some(b)) = (lookup[p], lookup[q]) {
                    g.add_edge(a, b, EdgeReason::InadmissibleBs);
                }
            }
        }
    }
}

fn add_lower_edges(g: &mut ConflictGraph, state: &SessionState, c: &ConnectionMatrix) {
    // User-layer vertex indices grouped by transmitter.
    let mut by_tx: Vec<Vec<usize>> = vec![Vec::new(); state.n_users()];
    for (idx, v) in g.vertices.iter().enumerate() {
        if let Transmitter::User(u) = v.transmitter {
            by_tx[u].push(idx);
        }
    }
    for i in 0..state.n_users() {
        let group = &by_tx[i];
        // C1: same transmitter, packets co-wanted by one of its neighbors.
        for (x, &a) in group.iter().enumerate() {
            let pa = g.vertices[a].packet;
            for &b in &group[x + 1..] {
                let pb = g.vertices[b].packet;
                let inadmissible = c
                    .neighbors(i)
                    .iter()
                    .any(|k| state.wants(k).contains(pa) && state.wants(k).contains(pb));
                if inadmissible {
                    g.add_edge(a, b, EdgeReason::C1);
                }
            }
        }
        for j in i + 1..state.n_users() {
            let mut tags = Vec::new();
            if c.share_neighbor(i, j) {
                tags.push(EdgeReason::C2);
            }
            if c.connected(i, j) {
                tags.push(EdgeReason::C3);
            }
            for &reason in &tags {
                for &a in &by_tx[i] {
                    for &b in &by_tx[j] {
                        g.add_edge(a, b, reason);
                    }
                }
            }
        }
    }
}

fn add_redundancy_edges(g: &mut ConflictGraph) {
    let lookup = bs_index(g);
    for idx in 0..g.len() {
        let v = g.vertices[idx];
        if let Transmitter::User(_) = v.transmitter {
            if let Some(bs) = lookup[v.packet] {
                g.add_edge(bs, idx, EdgeReason::Redundancy);
            }
        }
    }
}

/// Cellular-side graph: one vertex per missing packet, edges between packets
/// some user wants together.
pub fn build_higher_layer(state: &SessionState) -> ConflictGraph {
    let mut g =
        ConflictGraph::with_vertices(state.n_users(), state.n_packets(), higher_vertices(state));
    add_higher_edges(&mut g, state);
    g
}

/// D2D-side graph: vertex `(i, l)` when user `i` holds `l` and a neighbor of
/// `i` wants it; edges from conditions C1 to C3.
pub fn build_lower_layer(state: &SessionState, c: &ConnectionMatrix) -> Result<ConflictGraph> {
    check_dims(state, c)?;
    let mut g =
        ConflictGraph::with_vertices(state.n_users(), state.n_packets(), lower_vertices(state, c));
    add_lower_edges(&mut g, state, c);
    Ok(g)
}

pub fn build_two_layer(state: &SessionState, c: &ConnectionMatrix) -> Result<ConflictGraph> {
    check_dims(state, c)?;
    let mut vertices = higher_vertices(state);
    vertices.extend(lower_vertices(state, c));
    let mut g = ConflictGraph::with_vertices(state.n_users(), state.n_packets(), vertices);
    add_higher_edges(&mut g, state);
    add_lower_edges(&mut g, state, c);
    add_redundancy_edges(&mut g);
    Ok(g)
}

pub fn build(layer: Layer, state: &SessionState, c: &ConnectionMatrix) -> Result<ConflictGraph> {
    match layer {
        Layer::Higher => {
            check_dims(state, c)?;
            Ok(build_higher_layer(state))
        }
        Layer::Lower => build_lower_layer(state, c),
        Layer::Two => build_two_layer(state, c),
    }
}

/// Packets of the plan, as a set of (transmitter, packet) vertices.
pub fn plan_vertices(plan: &TransmissionPlan) -> BTreeSet<Vertex> {
    let mut out: BTreeSet<Vertex> = plan.bs_code.iter().map(|&p| Vertex::bs(p)).collect();
    for (&u, code) in &plan.d2d_codes {
        out.extend(code.iter().map(|&p| Vertex::user(u, p)));
    }
    out
}
