//! Dyad-indexed small undirected graphs, node attributes and panels.
//!
//! A graph on `n <= 11` nodes is a single `u64` whose low `D = n(n-1)/2`
//! bits mark the present dyads. Dyad `{i, j}` with `i < j` sits at its rank in
//! lexicographic `(i, j)` order, so statistic vectors and enumeration order
//! are reproducible across runs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported node count; `D = 55` dyads still fit one `u64`.
pub const MAX_NODES: usize = 11;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node count {0} outside supported range 2..={MAX_NODES}")]
    NodeCount(usize),
    #[error("node {node} out of range for n = {n}")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("dyad index {k} out of range for n = {n}")]
    DyadOutOfRange { k: usize, n: usize },
    #[error("edge mask {mask:#x} sets bits beyond the {dyads} dyads of n = {n}")]
    MaskOutOfRange { mask: u64, n: usize, dyads: usize },
    #[error("graphs have different node counts ({left} vs {right})")]
    NodeCountMismatch { left: usize, right: usize },
    #[error("duplicate edge {{{i}, {j}}}")]
    DuplicateEdge { i: usize, j: usize },
    #[error("formation network must contain the previous network")]
    NotSuperset,
    #[error("persistence network must be contained in the previous network")]
    NotSubset,
    #[error("attribute `{attribute}` has length {found}, expected {expected}")]
    AttributeLength {
        attribute: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("game `{game}`: {message}")]
    Game { game: String, message: String },
}

pub const fn dyad_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

const fn build_pairs() -> [[(u8, u8); 55]; MAX_NODES + 1] {
    let mut table = [[(0u8, 0u8); 55]; MAX_NODES + 1];
    let mut n = 2;
    while n <= MAX_NODES {
        let mut k = 0;
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n {
                table[n][k] = (i as u8, j as u8);
                k += 1;
                j += 1;
            }
            i += 1;
        }
        n += 1;
    }
    table
}

static DYAD_PAIRS: [[(u8, u8); 55]; MAX_NODES + 1] = build_pairs();

/// Position of an unordered node pair in the canonical dyad order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadIndex {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl DyadIndex {
    /// Inverse of [`dyad_index`]: the pair stored at linear index `k`.
    pub fn from_linear(k: usize, n: usize) -> Result<Self, GraphError> {
        check_n(n)?;
        if k >= dyad_count(n) {
            return Err(GraphError::DyadOutOfRange { k, n });
        }
        let (i, j) = DYAD_PAIRS[n][k];
        Ok(DyadIndex {
            i: i as usize,
            j: j as usize,
            k,
        })
    }

    pub fn bit(&self) -> u64 {
        1u64 << self.k
    }
}

/// Canonical index of dyad `{i, j}`; argument order does not matter.
pub fn dyad_index(i: usize, j: usize, n: usize) -> Result<DyadIndex, GraphError> {
    check_n(n)?;
    for node in [i, j] {
        if node >= n {
            return Err(GraphError::NodeOutOfRange { node, n });
        }
    }
    if i == j {
        return Err(GraphError::SelfLoop(i));
    }
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    let k = i * n - i * (i + 1) / 2 + (j - i - 1);
    Ok(DyadIndex { i, j, k })
}

pub(crate) fn pair_of(n: usize, k: usize) -> (usize, usize) {
    let (i, j) = DYAD_PAIRS[n][k];
    (i as usize, j as usize)
}

fn check_n(n: usize) -> Result<(), GraphError> {
    if (2..=MAX_NODES).contains(&n) {
        Ok(())
    } else {
        Err(GraphError::NodeCount(n))
    }
}

fn full_mask(n: usize) -> u64 {
    let d = dyad_count(n);
    if d == 64 {
        u64::MAX
    } else {
        (1u64 << d) - 1
    }
}

/// Undirected simple graph stored as a dyad bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SmallGraph {
    n: u8,
    mask: u64,
}

impl SmallGraph {
    pub fn empty(n: usize) -> Result<Self, GraphError> {
        check_n(n)?;
        Ok(SmallGraph { n: n as u8, mask: 0 })
    }

    pub fn complete(n: usize) -> Result<Self, GraphError> {
        check_n(n)?;
        Ok(SmallGraph {
            n: n as u8,
            mask: full_mask(n),
        })
    }

    pub fn from_mask(n: usize, mask: u64) -> Result<Self, GraphError> {
        check_n(n)?;
        if mask & !full_mask(n) != 0 {
            return Err(GraphError::MaskOutOfRange {
                mask,
                n,
                dyads: dyad_count(n),
            });
        }
        Ok(SmallGraph { n: n as u8, mask })
    }

    /// Builds a graph from an edge list, rejecting duplicates in either orientation.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = SmallGraph::empty(n)?;
        for &(i, j) in edges {
            let d = dyad_index(i, j, n)?;
            if g.mask & d.bit() != 0 {
                return Err(GraphError::DuplicateEdge { i: d.i, j: d.j });
            }
            g.mask |= d.bit();
        }
        Ok(g)
    }

    pub(crate) fn from_mask_unchecked(n: usize, mask: u64) -> Self {
        debug_assert!(mask & !full_mask(n) == 0);
        SmallGraph { n: n as u8, mask }
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn dyad_count(&self) -> usize {
        dyad_count(self.n())
    }

    pub fn edge_count(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn has_dyad(&self, d: DyadIndex) -> bool {
        self.mask & d.bit() != 0
    }

    pub fn has_edge(&self, i: usize, j: usize) -> Result<bool, GraphError> {
        Ok(self.has_dyad(dyad_index(i, j, self.n())?))
    }

    pub fn with_dyad(&self, d: DyadIndex) -> Self {
        SmallGraph {
            n: self.n,
            mask: self.mask | d.bit(),
        }
    }

    pub fn without_dyad(&self, d: DyadIndex) -> Self {
        SmallGraph {
            n: self.n,
            mask: self.mask & !d.bit(),
        }
    }

    /// Present edges as `(i, j)` pairs with `i < j`, in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n();
        BitIter(self.mask).map(move |k| pair_of(n, k))
    }

    /// Dyads absent from this graph.
    pub fn non_edges_mask(&self) -> u64 {
        !self.mask & full_mask(self.n())
    }

    /// Neighbour bitmask per node (bit `j` of entry `i` set iff `{i, j}` present).
    pub fn adjacency(&self) -> [u16; MAX_NODES] {
        let n = self.n();
        let mut adj = [0u16; MAX_NODES];
        for k in BitIter(self.mask) {
            let (i, j) = pair_of(n, k);
            adj[i] |= 1 << j;
            adj[j] |= 1 << i;
        }
        adj
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency()[node].count_ones() as usize
    }

    pub fn is_subset_of(&self, other: &SmallGraph) -> bool {
        self.n == other.n && self.mask & !other.mask == 0
    }

    fn same_n(&self, other: &SmallGraph) -> Result<(), GraphError> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(GraphError::NodeCountMismatch {
                left: self.n(),
                right: other.n(),
            })
        }
    }

    pub fn union(&self, other: &SmallGraph) -> Result<Self, GraphError> {
        self.same_n(other)?;
        Ok(SmallGraph {
            n: self.n,
            mask: self.mask | other.mask,
        })
    }

    pub fn intersection(&self, other: &SmallGraph) -> Result<Self, GraphError> {
        self.same_n(other)?;
        Ok(SmallGraph {
            n: self.n,
            mask: self.mask & other.mask,
        })
    }

    /// Edges of `self` not in `other`.
    pub fn difference(&self, other: &SmallGraph) -> Result<Self, GraphError> {
        self.same_n(other)?;
        Ok(SmallGraph {
            n: self.n,
            mask: self.mask & !other.mask,
        })
    }
}

/// Iterates the set bit positions of a mask in ascending order.
#[derive(Debug, Clone)]
pub(crate) struct BitIter(pub u64);

impl Iterator for BitIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let k = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(k)
    }
}

/// Splits a transition into its formation (union) and persistence
/// (intersection) networks.
pub fn split_transition(
    y_prev: &SmallGraph,
    y_curr: &SmallGraph,
) -> Result<(SmallGraph, SmallGraph), GraphError> {
    Ok((y_prev.union(y_curr)?, y_prev.intersection(y_curr)?))
}

/// Recovers the current network from formation and persistence networks:
/// `y_minus ∪ (y_plus \ y_prev)`.
pub fn reconstruct_target(
    y_plus: &SmallGraph,
    y_minus: &SmallGraph,
    y_prev: &SmallGraph,
) -> Result<SmallGraph, GraphError> {
    y_plus.same_n(y_prev)?;
    y_minus.same_n(y_prev)?;
    if !y_prev.is_subset_of(y_plus) {
        return Err(GraphError::NotSuperset);
    }
    if !y_minus.is_subset_of(y_prev) {
        return Err(GraphError::NotSubset);
    }
    y_minus.union(&y_plus.difference(y_prev)?)
}

/// Iterator over all graphs `base | sub` where `sub` ranges over the submasks
/// of `free` in ascending order.
#[derive(Debug, Clone)]
pub struct SubmaskGraphs {
    n: usize,
    base: u64,
    free: u64,
    next: Option<u64>,
    remaining: u64,
}

impl SubmaskGraphs {
    fn new(n: usize, base: u64, free: u64) -> Self {
        let bits = free.count_ones();
        SubmaskGraphs {
            n,
            base,
            free,
            next: Some(0),
            remaining: if bits >= 64 { u64::MAX } else { 1u64 << bits },
        }
    }

    /// Size of the space, `2^(free dyads)`.
    pub fn cardinality(&self) -> u64 {
        let bits = self.free.count_ones();
        if bits >= 64 {
            u64::MAX
        } else {
            1u64 << bits
        }
    }
}

impl Iterator for SubmaskGraphs {
    type Item = SmallGraph;

    fn next(&mut self) -> Option<SmallGraph> {
        let sub = self.next?;
        self.next = if sub == self.free {
            None
        } else {
            Some(sub.wrapping_sub(self.free) & self.free)
        };
        self.remaining = self.remaining.saturating_sub(1);
        Some(SmallGraph::from_mask_unchecked(self.n, self.base | sub))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (r, Some(r))
    }
}

/// All supersets of `y_prev`: the sample space of the formation network.
pub fn enumerate_formation_space(y_prev: &SmallGraph) -> SubmaskGraphs {
    SubmaskGraphs::new(y_prev.n(), y_prev.mask, y_prev.non_edges_mask())
}

/// All subsets of `y_prev`: the sample space of the persistence network.
pub fn enumerate_persistence_space(y_prev: &SmallGraph) -> SubmaskGraphs {
    SubmaskGraphs::new(y_prev.n(), 0, y_prev.mask)
}

/// A node's public-goods decision in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Decision {
    #[serde(rename = "C")]
    Cooperate,
    #[serde(rename = "D")]
    Defect,
    /// No decision on record yet (before the first round).
    #[serde(rename = "N")]
    None,
}

impl Decision {
    pub fn code(&self) -> &'static str {
        match self {
            Decision::Cooperate => "C",
            Decision::Defect => "D",
            Decision::None => "N",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "C" => Some(Decision::Cooperate),
            "D" => Some(Decision::Defect),
            "N" => Some(Decision::None),
            _ => None,
        }
    }
}

/// Per-node covariates at one time point.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AttributeTable {
    decision: Vec<Decision>,
    wealth: Vec<i64>,
}

impl AttributeTable {
    pub fn new(decision: Vec<Decision>, wealth: Vec<i64>) -> Result<Self, GraphError> {
        if decision.len() != wealth.len() {
            return Err(GraphError::AttributeLength {
                attribute: "wealth",
                expected: decision.len(),
                found: wealth.len(),
            });
        }
        Ok(AttributeTable { decision, wealth })
    }

    /// Every node undecided with the same wealth.
    pub fn uniform(n: usize, wealth: i64) -> Self {
        AttributeTable {
            decision: vec![Decision::None; n],
            wealth: vec![wealth; n],
        }
    }

    pub fn n(&self) -> usize {
        self.decision.len()
    }

    pub fn decision(&self) -> &[Decision] {
        &self.decision
    }

    pub fn wealth(&self) -> &[i64] {
        &self.wealth
    }

    pub(crate) fn check_n(&self, n: usize) -> Result<(), GraphError> {
        if self.n() == n {
            Ok(())
        } else {
            Err(GraphError::AttributeLength {
                attribute: "decision",
                expected: n,
                found: self.n(),
            })
        }
    }
}

/// One observation of a game: the network at time `t` and the attributes in
/// force for the transition into `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub t: i64,
    pub graph: SmallGraph,
    pub attrs: AttributeTable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    id: String,
    n: usize,
    snapshots: Vec<Snapshot>,
}

impl Game {
    pub fn new(id: impl Into<String>, snapshots: Vec<Snapshot>) -> Result<Self, GraphError> {
        let id = id.into();
        let fail = |message: String| GraphError::Game {
            game: id.clone(),
            message,
        };
        if snapshots.len() < 2 {
            return Err(fail(format!(
                "needs at least 2 snapshots, found {}",
                snapshots.len()
            )));
        }
        let n = snapshots[0].graph.n();
        for (idx, s) in snapshots.iter().enumerate() {
            if s.graph.n() != n {
                return Err(fail(format!(
                    "snapshot {idx} has n = {}, expected {n}",
                    s.graph.n()
                )));
            }
            s.attrs
                .check_n(n)
                .map_err(|e| fail(format!("snapshot {idx}: {e}")))?;
            if idx > 0 && s.t <= snapshots[idx - 1].t {
                return Err(fail(format!(
                    "time indices must increase strictly ({} follows {})",
                    s.t,
                    snapshots[idx - 1].t
                )));
            }
        }
        Ok(Game { id, n, snapshots })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    /// Consecutive snapshot pairs; the attribute table of the later snapshot
    /// governs each transition.
    pub fn transitions(&self) -> impl Iterator<Item = TransitionView<'_>> {
        self.snapshots.windows(2).map(|w| TransitionView {
            t: w[1].t,
            y_prev: w[0].graph,
            y_curr: w[1].graph,
            attrs: &w[1].attrs,
        })
    }
}

/// Independent games observed over time.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Panel {
    games: Vec<Game>,
}

impl Panel {
    pub fn new(games: Vec<Game>) -> Self {
        Panel { games }
    }

    pub fn games(&self) -> &[Game] {
        &self.games
    }

    pub fn transition_count(&self) -> usize {
        self.games.iter().map(|g| g.snapshots.len() - 1).sum()
    }

    /// All transitions, games first then time.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, TransitionView<'_>)> {
        self.games
            .iter()
            .enumerate()
            .flat_map(|(g, game)| game.transitions().map(move |tv| (g, tv)))
    }
}

/// One step `y_prev -> y_curr` with its governing attributes.
#[derive(Debug, Clone, Copy)]
pub struct TransitionView<'a> {
    /// Time index of the target network.
    pub t: i64,
    pub y_prev: SmallGraph,
    pub y_curr: SmallGraph,
    pub attrs: &'a AttributeTable,
}

impl<'a> TransitionView<'a> {
    pub fn new(
        y_prev: SmallGraph,
        y_curr: SmallGraph,
        attrs: &'a AttributeTable,
    ) -> Result<Self, GraphError> {
        y_prev.same_n(&y_curr)?;
        attrs.check_n(y_prev.n())?;
        Ok(TransitionView {
            t: 1,
            y_prev,
            y_curr,
            attrs,
        })
    }

    pub fn n(&self) -> usize {
        self.y_prev.n()
    }

    pub fn y_plus(&self) -> SmallGraph {
        SmallGraph::from_mask_unchecked(self.n(), self.y_prev.mask | self.y_curr.mask)
    }

    pub fn y_minus(&self) -> SmallGraph {
        SmallGraph::from_mask_unchecked(self.n(), self.y_prev.mask & self.y_curr.mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all_graphs(n: usize) -> impl Iterator<Item = SmallGraph> {
        let d = dyad_count(n);
        (0..(1u64 << d)).map(move |m| SmallGraph::from_mask(n, m).unwrap())
    }

    #[test]
    fn dyad_index_examples() {
        assert_eq!(dyad_index(0, 1, 6).unwrap().k, 0);
        assert_eq!(dyad_index(4, 5, 6).unwrap().k, 14);
        assert_eq!(dyad_index(3, 1, 6).unwrap(), dyad_index(1, 3, 6).unwrap());
        assert_eq!(dyad_index(2, 2, 6), Err(GraphError::SelfLoop(2)));
        assert_eq!(
            dyad_index(0, 6, 6),
            Err(GraphError::NodeOutOfRange { node: 6, n: 6 })
        );
        assert!(dyad_index(0, 1, 12).is_err());
    }

    #[test]
    fn dyad_index_is_lexicographic_bijection() {
        for n in 2..=MAX_NODES {
            let mut expected = 0;
            for i in 0..n {
                for j in i + 1..n {
                    let d = dyad_index(i, j, n).unwrap();
                    assert_eq!(d.k, expected);
                    assert_eq!(DyadIndex::from_linear(d.k, n).unwrap(), d);
                    expected += 1;
                }
            }
            assert_eq!(expected, dyad_count(n));
        }
    }

    #[test]
    fn mask_bounds_enforced() {
        assert!(SmallGraph::from_mask(3, 0b111).is_ok());
        assert!(SmallGraph::from_mask(3, 0b1000).is_err());
        assert_eq!(SmallGraph::complete(11).unwrap().edge_count(), 55);
        assert!(SmallGraph::from_edges(4, &[(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn set_operation_examples() {
        let y = SmallGraph::from_edges(5, &[(0, 1), (2, 4), (1, 3)]).unwrap();
        let e = SmallGraph::empty(5).unwrap();
        let k = SmallGraph::complete(5).unwrap();
        assert_eq!(e.union(&y).unwrap(), y);
        assert_eq!(y.intersection(&y).unwrap(), y);
        assert_eq!(k.difference(&e).unwrap(), k);
        let other = SmallGraph::empty(4).unwrap();
        assert!(matches!(
            y.union(&other),
            Err(GraphError::NodeCountMismatch { left: 5, right: 4 })
        ));
    }

    #[test]
    fn split_examples() {
        let y = SmallGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let e = SmallGraph::empty(4).unwrap();
        assert_eq!(split_transition(&e, &y).unwrap(), (y, e));
        assert_eq!(split_transition(&y, &y).unwrap(), (y, y));
        assert_eq!(split_transition(&y, &e).unwrap(), (y, e));
    }

    #[test]
    fn reconstruction_identity_exhaustive() {
        for n in 2..=4 {
            for a in all_graphs(n) {
                for b in all_graphs(n) {
                    let (plus, minus) = split_transition(&a, &b).unwrap();
                    let back = reconstruct_target(&plus, &minus, &a).unwrap();
                    assert_eq!(back, b);
                    // the other closed form: y+ \ (y_prev \ y-)
                    let alt = plus.difference(&a.difference(&minus).unwrap()).unwrap();
                    assert_eq!(alt, back);
                }
            }
        }
    }

    #[test]
    fn reconstruct_rejects_bad_preconditions() {
        let prev = SmallGraph::from_edges(3, &[(0, 1)]).unwrap();
        let e = SmallGraph::empty(3).unwrap();
        assert_eq!(reconstruct_target(&e, &e, &prev), Err(GraphError::NotSuperset));
        let k = SmallGraph::complete(3).unwrap();
        assert_eq!(reconstruct_target(&k, &k, &prev), Err(GraphError::NotSubset));
        assert_eq!(reconstruct_target(&prev, &prev, &prev).unwrap(), prev);
    }

    #[test]
    fn reconstruct_matches_dyadwise_set_algebra_n4() {
        // brute force: the target has dyad k iff (k in y- ) or (k in y+ and not in y_prev)
        for a in all_graphs(4) {
            for b in all_graphs(4) {
                let (plus, minus) = split_transition(&a, &b).unwrap();
                let got = reconstruct_target(&plus, &minus, &a).unwrap();
                for k in 0..6 {
                    let d = DyadIndex::from_linear(k, 4).unwrap();
                    let expect = minus.has_dyad(d) || (plus.has_dyad(d) && !a.has_dyad(d));
                    assert_eq!(got.has_dyad(d), expect);
                }
            }
        }
    }

    #[test]
    fn formation_space_counts_and_order() {
        let prev = SmallGraph::from_edges(6, &[(0, 1), (0, 2), (1, 3), (2, 5), (4, 5)]).unwrap();
        let space: Vec<_> = enumerate_formation_space(&prev).collect();
        assert_eq!(space.len(), 1024);
        assert!(space.windows(2).all(|w| w[0].mask() < w[1].mask()));
        assert!(space.iter().all(|g| prev.is_subset_of(g)));
        let k6 = SmallGraph::complete(6).unwrap();
        assert_eq!(enumerate_formation_space(&k6).collect::<Vec<_>>(), vec![k6]);
        assert_eq!(enumerate_persistence_space(&prev).count(), 32);
        let e = SmallGraph::empty(6).unwrap();
        assert_eq!(enumerate_persistence_space(&e).collect::<Vec<_>>(), vec![e]);
    }

    #[test]
    fn spaces_match_filter_oracle_n3() {
        for prev in all_graphs(3) {
            let supers: Vec<_> = all_graphs(3).filter(|g| prev.is_subset_of(g)).collect();
            let subs: Vec<_> = all_graphs(3).filter(|g| g.is_subset_of(&prev)).collect();
            assert_eq!(enumerate_formation_space(&prev).collect::<Vec<_>>(), supers);
            assert_eq!(enumerate_persistence_space(&prev).collect::<Vec<_>>(), subs);
        }
    }

    #[test]
    fn game_validation() {
        let g = SmallGraph::empty(3).unwrap();
        let a = AttributeTable::uniform(3, 500);
        let snap = |t| Snapshot {
            t,
            graph: g,
            attrs: a.clone(),
        };
        assert!(Game::new("g", vec![snap(0)]).is_err());
        assert!(Game::new("g", vec![snap(1), snap(1)]).is_err());
        let bad_attrs = Snapshot {
            t: 2,
            graph: g,
            attrs: AttributeTable::uniform(4, 500),
        };
        assert!(Game::new("g", vec![snap(1), bad_attrs]).is_err());
        let game = Game::new("g", vec![snap(0), snap(1), snap(5)]).unwrap();
        let ts: Vec<_> = game.transitions().map(|tv| tv.t).collect();
        assert_eq!(ts, vec![1, 5]);
    }

    fn graph_pair(n: usize) -> impl Strategy<Value = (SmallGraph, SmallGraph, SmallGraph)> {
        let d = dyad_count(n);
        let m = (1u64 << d) - 1;
        (any::<u64>(), any::<u64>(), any::<u64>()).prop_map(move |(a, b, c)| {
            (
                SmallGraph::from_mask(n, a & m).unwrap(),
                SmallGraph::from_mask(n, b & m).unwrap(),
                SmallGraph::from_mask(n, c & m).unwrap(),
            )
        })
    }

    proptest! {
        #[test]
        fn set_algebra_laws((a, b, c) in graph_pair(7)) {
            prop_assert_eq!(a.union(&b).unwrap(), b.union(&a).unwrap());
            prop_assert_eq!(a.intersection(&b).unwrap(), b.intersection(&a).unwrap());
            prop_assert_eq!(
                a.union(&b).unwrap().union(&c).unwrap(),
                a.union(&b.union(&c).unwrap()).unwrap()
            );
            prop_assert_eq!(
                a.intersection(&b).unwrap().intersection(&c).unwrap(),
                a.intersection(&b.intersection(&c).unwrap()).unwrap()
            );
            prop_assert_eq!(a.union(&a).unwrap(), a);
            prop_assert_eq!(a.intersection(&a).unwrap(), a);
            prop_assert!(a.difference(&b).unwrap().intersection(&b).unwrap().is_empty());
        }

        #[test]
        fn enumerators_have_no_duplicates((a, _b, _c) in graph_pair(5)) {
            let f: Vec<_> = enumerate_formation_space(&a).map(|g| g.mask()).collect();
            let p: Vec<_> = enumerate_persistence_space(&a).map(|g| g.mask()).collect();
            prop_assert_eq!(f.len() as u64, 1u64 << (10 - a.edge_count()));
            prop_assert_eq!(p.len() as u64, 1u64 << a.edge_count());
            prop_assert!(f.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(p.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
