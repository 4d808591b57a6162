//! Minimal transversal enumeration (hypergraph dualization).
//!
//! The enumerator is a depth-first minimal-hitting-set search in the style of
//! MMCS: at every node it branches on the uncovered edge with the fewest
//! candidate vertices and keeps, for each chosen vertex, the set of edges it
//! alone hits ("critical" edges). A partial set whose member loses all its
//! critical edges can never become minimal and is abandoned. Every minimal
//! transversal is produced exactly once, and memory stays proportional to the
//! depth of the current branch.

use crate::bits::BitSet;
use crate::error::{Error, Result};
use crate::table::AttrSet;

/// A family of edges over a vertex set drawn from `0..universe`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    vertices: BitSet,
    edges: Vec<BitSet>,
}

impl Hypergraph {
    /// Builds a hypergraph; the edge family is minimized on construction.
    pub fn new(universe: usize, vertices: &AttrSet, edges: &[AttrSet]) -> Result<Self> {
        if let Some(v) = vertices.last().filter(|&v| v >= universe) {
            return Err(Error::InvalidArgument(format!("vertex {v} outside universe {universe}")));
        }
        let vset = BitSet::from_indices(universe, vertices.iter());
        let mut bits = Vec::with_capacity(edges.len());
        for e in edges {
            if !e.is_subset(vertices) {
                return Err(Error::InvalidArgument(format!("edge {:?} not within vertices", e.as_slice())));
            }
            bits.push(BitSet::from_indices(universe, e.iter()));
        }
        Ok(Self::from_bits(vset, bits))
    }

    pub(crate) fn from_bits(vertices: BitSet, edges: Vec<BitSet>) -> Self {
        Hypergraph {
            vertices,
            edges: minimize_bit_edges(edges),
        }
    }

    pub fn universe(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> AttrSet {
        self.vertices.iter().collect()
    }

    pub fn edges(&self) -> Vec<AttrSet> {
        self.edges.iter().map(|e| e.iter().collect()).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_empty_edge(&self) -> bool {
        self.edges.iter().any(BitSet::is_empty)
    }

    pub fn is_transversal(&self, xs: &AttrSet) -> bool {
        let x = BitSet::from_indices(self.universe(), xs.iter().filter(|&v| v < self.universe()));
        self.edges.iter().all(|e| e.intersects(&x))
    }
}

/// Drops duplicate edges and every edge that contains another edge.
pub fn minimize_edges(edges: &[AttrSet]) -> Vec<AttrSet> {
    let mut sorted: Vec<&AttrSet> = edges.iter().collect();
    sorted.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sorted.dedup();
    let mut kept: Vec<AttrSet> = Vec::new();
    for e in sorted {
        if !kept.iter().any(|k| k.is_subset(e)) {
            kept.push(e.clone());
        }
    }
    kept.sort();
    kept
}

pub(crate) fn minimize_bit_edges(mut edges: Vec<BitSet>) -> Vec<BitSet> {
    edges.sort_by_key(BitSet::count);
    let mut kept: Vec<BitSet> = Vec::new();
    for e in edges {
        if !kept.iter().any(|k| k.is_subset(&e)) {
            kept.push(e);
        }
    }
    kept
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DualizeOptions {
    /// Stop after this many transversals; `None` enumerates all.
    pub limit: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dualization {
    /// Minimal transversals in lexicographic order.
    pub transversals: Vec<AttrSet>,
    /// Set when the limit cut the enumeration short.
    pub truncated: bool,
}

/// All minimal transversals of `h`, sorted lexicographically.
pub fn minimal_transversals(h: &Hypergraph) -> Vec<AttrSet> {
    dualize(h, DualizeOptions::default()).transversals
}

pub fn dualize(h: &Hypergraph, opts: DualizeOptions) -> Dualization {
    let mut transversals = Vec::new();
    let truncated = enumerate_transversals(h, opts.limit, |_| true, |s| {
        transversals.push(s.iter().copied().collect())
    });
    transversals.sort();
    Dualization {
        transversals,
        truncated,
    }
}

/// Streams minimal transversals to `emit` in search order.
///
/// `admissible` is consulted whenever a vertex is added to the partial set; it
/// must be antitone (if it rejects a set it rejects every superset), and a
/// rejected set's whole branch is skipped. Only admissible transversals are
/// emitted. Returns true if `limit` stopped the search early.
pub fn enumerate_transversals<A, E>(h: &Hypergraph, limit: Option<usize>, admissible: A, emit: E) -> bool
where
    A: FnMut(&[usize]) -> bool,
    E: FnMut(&[usize]),
{
    let m = h.edges.len();
    let mut occ = vec![BitSet::new(m); h.universe()];
    for (i, e) in h.edges.iter().enumerate() {
        for v in e.iter() {
            occ[v].insert(i);
        }
    }
    let mut search = Search {
        edges: &h.edges,
        occ,
        chosen: Vec::new(),
        crit: Vec::new(),
        admissible,
        emit,
        limit,
        emitted: 0,
        stopped: false,
    };
    let mut cand = h.vertices.clone();
    search.descend(&mut cand, &BitSet::full(m));
    search.stopped
}

struct Search<'a, A, E> {
    edges: &'a [BitSet],
    occ: Vec<BitSet>,
    chosen: Vec<usize>,
    crit: Vec<BitSet>,
    admissible: A,
    emit: E,
    limit: Option<usize>,
    emitted: usize,
    stopped: bool,
}

impl<A, E> Search<'_, A, E>
where
    A: FnMut(&[usize]) -> bool,
    E: FnMut(&[usize]),
{
    fn descend(&mut self, cand: &mut BitSet, uncov: &BitSet) {
        if self.stopped {
            return;
        }
        if uncov.is_empty() {
            if self.limit.is_some_and(|l| self.emitted >= l) {
                self.stopped = true;
                return;
            }
            self.emitted += 1;
            (self.emit)(&self.chosen);
            return;
        }

        let mut best: Option<(usize, usize)> = None;
        for e in uncov.iter() {
            let k = self.edges[e].intersection_count(cand);
            if best.is_none_or(|(_, bk)| k < bk) {
                best = Some((e, k));
                if k == 0 {
                    break;
                }
            }
        }
        let (edge, k) = best.expect("uncovered set is nonempty");
        if k == 0 {
            return;
        }

        let mut branch = self.edges[edge].clone();
        branch.intersect_with(cand);
        cand.difference_with(&branch);

        for v in branch.iter() {
            if !self.stopped {
                self.try_vertex(v, cand, uncov);
            }
            cand.insert(v);
        }
    }

    fn try_vertex(&mut self, v: usize, cand: &mut BitSet, uncov: &BitSet) {
        let occ_v = &self.occ[v];
        let mut new_crit = Vec::with_capacity(self.crit.len() + 1);
        for c in &self.crit {
            let mut c = c.clone();
            c.difference_with(occ_v);
            if c.is_empty() {
                return;
            }
            new_crit.push(c);
        }
        let mut own = uncov.clone();
        own.intersect_with(occ_v);
        new_crit.push(own);
        let mut next_uncov = uncov.clone();
        next_uncov.difference_with(occ_v);

        self.chosen.push(v);
        if (self.admissible)(&self.chosen) {
            let saved = std::mem::replace(&mut self.crit, new_crit);
            self.descend(cand, &next_uncov);
            self.crit = saved;
        }
        self.chosen.pop();
    }
}
