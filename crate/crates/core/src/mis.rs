//! Maximum independent set search.
//!
//! A maximum independent set of the conflict graph is a maximum clique of
//! its complement. The size is found with Bron-Kerbosch (Tomita pivot:
//! the vertex of `P ∪ X` with most complement-neighbors in `P`) plus a
//! greedy-colouring bound; a second ordered pass then returns the
//! lexicographically smallest set of that size.

use crate::bitset::BitSet;
use crate::conflict_graph::ConflictGraph;
use crate::error::{Error, Result};

pub type VertexSet = BitSet;

pub const DEFAULT_VERTEX_CEILING: usize = 400;
pub const BRUTE_FORCE_LIMIT: usize = 22;

pub fn is_independent(graph: &ConflictGraph, set: &VertexSet) -> bool {
    graph.violating_edge(set).is_none()
}

#[derive(Debug, Clone, Copy)]
pub struct MisSolver {
    pub vertex_ceiling: usize,
}

impl Default for MisSolver {
    fn default() -> Self {
        Self {
            vertex_ceiling: DEFAULT_VERTEX_CEILING,
        }
    }
}

impl MisSolver {
    pub fn new(vertex_ceiling: usize) -> Self {
        Self { vertex_ceiling }
    }

    pub fn check_capacity(&self, graph: &ConflictGraph) -> Result<()> {
        if graph.len() > self.vertex_ceiling {
            return Err(Error::Capacity {
                vertices: graph.len(),
                limit: self.vertex_ceiling,
                n_users: graph.n_users(),
                n_packets: graph.n_packets(),
            });
        }
        Ok(())
    }

    pub fn solve(&self, graph: &ConflictGraph) -> Result<VertexSet> {
        self.check_capacity(graph)?;
        let n = graph.len();
        if n == 0 {
            return Ok(BitSet::new(0));
        }
        let comp = complement(graph);
        let mut search = CliqueSearch {
            comp: &comp,
            best: 0,
            scratch: Vec::new(),
        };
        search.bron_kerbosch(0, BitSet::full(n), BitSet::new(n));
        let alpha = search.best;

        let mut chosen = Vec::with_capacity(alpha);
        let found = search.lex_first(&mut chosen, BitSet::full(n), alpha);
        debug_assert!(
            found,
            "ordered pass must reach the bound found by Bron-Kerbosch"
        );
        Ok(BitSet::from_indices(n, chosen))
    }
}

/// Maximum independent set with the default vertex ceiling.
pub fn maximum_independent_set(graph: &ConflictGraph) -> Result<VertexSet> {
    MisSolver::default().solve(graph)
}

/// Size of a maximum independent set (no tie-break pass).
pub fn independence_number(graph: &ConflictGraph) -> usize {
    let n = graph.len();
    if n == 0 {
        return 0;
    }
    let comp = complement(graph);
    let mut search = CliqueSearch {
        comp: &comp,
        best: 0,
        scratch: Vec::new(),
    };
    search.bron_kerbosch(0, BitSet::full(n), BitSet::new(n));
    search.best
}

fn complement(graph: &ConflictGraph) -> Vec<BitSet> {
    let n = graph.len();
    (0..n)
        .map(|v| {
            let mut row = BitSet::full(n);
            row.difference_with(graph.neighbors(v));
            row.remove(v);
            row
        })
        .collect()
}

struct CliqueSearch<'a> {
    comp: &'a [BitSet],
    best: usize,
    scratch: Vec<BitSet>,
}

impl CliqueSearch<'_> {
    /// Upper bound on the largest clique inside `p`: the number of colour
    /// classes of a greedy colouring (each class is an independent set in
    /// the complement, so a clique takes at most one vertex per class).
    fn colour_bound(&mut self, p: &BitSet, stop_above: usize) -> usize {
        let mut uncoloured = p.clone();
        let mut colours = 0;
        let mut class_candidates = self
            .scratch
            .pop()
            .unwrap_or_else(|| BitSet::new(p.capacity()));
        while !uncoloured.is_empty() {
            colours += 1;
            if colours > stop_above {
                break;
            }
            class_candidates.clone_from(&uncoloured);
            while let Some(v) = class_candidates.first() {
                uncoloured.remove(v);
                class_candidates.remove(v);
                class_candidates.difference_with(&self.comp[v]);
            }
        }
        self.scratch.push(class_candidates);
        colours
    }

    fn bron_kerbosch(&mut self, r_size: usize, mut p: BitSet, mut x: BitSet) {
        if p.is_empty() {
            if r_size > self.best {
                self.best = r_size;
            }
            return;
        }
        if r_size + p.count() <= self.best {
            return;
        }
        let needed = self.best.saturating_sub(r_size);
        if self.colour_bound(&p, needed) <= needed {
            return;
        }
        let pivot = p
            .iter()
            .chain(x.iter())
            .max_by_key(|&u| (p.intersection_count(&self.comp[u]), std::cmp::Reverse(u)))
            .expect("P is nonempty");
        let branch = p.difference(&self.comp[pivot]);
        for v in &branch {
            let np = p.intersection(&self.comp[v]);
            let nx = x.intersection(&self.comp[v]);
            self.bron_kerbosch(r_size + 1, np, nx);
            p.remove(v);
            x.insert(v);
            if r_size + p.count() <= self.best {
                return;
            }
        }
    }

    /// Depth-first, include-first search over vertices in index order for a
    /// clique of exactly `need` more vertices. The first hit is the
    /// lexicographically smallest.
    fn lex_first(&mut self, chosen: &mut Vec<usize>, mut p: BitSet, need: usize) -> bool {
        if need == 0 {
            return true;
        }
        while p.count() >= need {
            if self.colour_bound(&p, need) < need {
                return false;
            }
            let v = p.first().expect("count >= need > 0");
            p.remove(v);
            chosen.push(v);
            if self.lex_first(chosen, p.intersection(&self.comp[v]), need - 1) {
                return true;
            }
            chosen.pop();
        }
        false
    }
}

/// Exhaustive search over all subsets; same tie-break as [`MisSolver`].
pub fn brute_force_mis(graph: &ConflictGraph) -> Result<VertexSet> {
    let n = graph.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::Capacity {
            vertices: n,
            limit: BRUTE_FORCE_LIMIT,
            n_users: graph.n_users(),
            n_packets: graph.n_packets(),
        });
    }
    let adj: Vec<u32> = (0..n)
        .map(|v| graph.neighbors(v).iter().fold(0u32, |m, b| m | 1 << b))
        .collect();
    let mut best: u32 = 0;
    for mask in 1u32..(1u32 << n) {
        let independent = (0..n).all(|v| mask & (1 << v) == 0 || adj[v] & mask == 0);
        if !independent {
            continue;
        }
        let (size, best_size) = (mask.count_ones(), best.count_ones());
        // Equal size: the smaller sorted index list owns the lowest differing bit.
        if size > best_size
            || (size == best_size && mask & (1 << (mask ^ best).trailing_zeros()) != 0)
        {
            best = mask;
        }
    }
    Ok(BitSet::from_indices(
        n,
        (0..n).filter(|&v| best & (1 << v) != 0),
    ))
}
