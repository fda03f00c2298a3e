//! Sufficient-statistic terms for the formation and persistence models.
//!
//! Every term value is `scale * count` where `count` is an integer computed
//! exactly (edge, triangle and homophily counts, or summed absolute wealth
//! differences in game units). The likelihood module keys its enumeration
//! tables on those integer counts.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{pair_of, AttributeTable, BitIter, Decision, DyadIndex, SmallGraph, MAX_NODES};
use crate::io::terms::{parse_term, TermParseError};

/// Wealth is measured in thousands of game units unless a scale is given.
pub const DEFAULT_ABSDIFF_SCALE: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("attribute table covers {attrs} nodes but the graph has {graph}")]
    NodeCountMismatch { graph: usize, attrs: usize },
    #[error("absdiff scale must be positive and finite, got {0}")]
    InvalidScale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoricalAttr {
    Decision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericAttr {
    Wealth,
}

impl CategoricalAttr {
    pub fn name(&self) -> &'static str {
        match self {
            CategoricalAttr::Decision => "decision",
        }
    }
}

impl NumericAttr {
    pub fn name(&self) -> &'static str {
        match self {
            NumericAttr::Wealth => "wealth",
        }
    }
}

/// One model term. Serialized in the term mini-language, e.g.
/// `nodematch(decision,C)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TermSpec {
    Edges,
    Triangles,
    /// Ties whose endpoints both carry `value`.
    NodeMatch {
        attr: CategoricalAttr,
        value: Decision,
    },
    /// `scale * |x_i - x_j|` summed over ties.
    AbsDiff { attr: NumericAttr, scale: f64 },
}

impl Eq for TermSpec {}

impl Hash for TermSpec {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            TermSpec::Edges | TermSpec::Triangles => {}
            TermSpec::NodeMatch { attr, value } => {
                attr.hash(state);
                value.hash(state);
            }
            TermSpec::AbsDiff { attr, scale } => {
                attr.hash(state);
                scale.to_bits().hash(state);
            }
        }
    }
}

impl TermSpec {
    pub fn nodematch(value: Decision) -> Self {
        TermSpec::NodeMatch {
            attr: CategoricalAttr::Decision,
            value,
        }
    }

    pub fn absdiff(scale: f64) -> Result<Self, StatsError> {
        if scale.is_finite() && scale > 0.0 {
            Ok(TermSpec::AbsDiff {
                attr: NumericAttr::Wealth,
                scale,
            })
        } else {
            Err(StatsError::InvalidScale(scale))
        }
    }

    /// Multiplier from the integer count to the statistic value.
    pub fn scale(&self) -> f64 {
        match self {
            TermSpec::AbsDiff { scale, .. } => *scale,
            _ => 1.0,
        }
    }

    pub fn is_dyadic_independent(&self) -> bool {
        is_dyadic_independent(self)
    }

    /// Integer contribution of dyad `{i, j}` for dyadic-independent terms.
    fn dyad_weight(&self, i: usize, j: usize, attrs: &AttributeTable) -> i64 {
        match self {
            TermSpec::Edges => 1,
            TermSpec::Triangles => 0,
            TermSpec::NodeMatch { value, .. } => {
                let d = attrs.decision();
                i64::from(d[i] == *value && d[j] == *value)
            }
            TermSpec::AbsDiff { .. } => {
                let w = attrs.wealth();
                (w[i] - w[j]).abs()
            }
        }
    }
}

impl fmt::Display for TermSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermSpec::Edges => write!(f, "edges"),
            TermSpec::Triangles => write!(f, "triangles"),
            TermSpec::NodeMatch { attr, value } => {
                write!(f, "nodematch({},{})", attr.name(), value.code())
            }
            TermSpec::AbsDiff { attr, scale } => {
                write!(f, "absdiff({},scale={})", attr.name(), scale)
            }
        }
    }
}

impl FromStr for TermSpec {
    type Err = TermParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_term(s)
    }
}

impl TryFrom<String> for TermSpec {
    type Error = TermParseError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<TermSpec> for String {
    fn from(t: TermSpec) -> String {
        t.to_string()
    }
}

/// Ordered term lists for both sides of the model. Term order fixes
/// parameter order: formation parameters first, then persistence.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelSpec {
    pub formation: Vec<TermSpec>,
    pub persistence: Vec<TermSpec>,
}

impl ModelSpec {
    pub fn new(formation: Vec<TermSpec>, persistence: Vec<TermSpec>) -> Self {
        ModelSpec {
            formation,
            persistence,
        }
    }

    /// Same terms on both sides, as in the public-goods analysis.
    pub fn symmetric(terms: Vec<TermSpec>) -> Self {
        ModelSpec {
            formation: terms.clone(),
            persistence: terms,
        }
    }

    pub fn dim(&self) -> usize {
        self.formation.len() + self.persistence.len()
    }

    pub fn is_dyadic_independent(&self) -> bool {
        self.formation
            .iter()
            .chain(&self.persistence)
            .all(is_dyadic_independent)
    }

    /// `(side, term)` labels in parameter order.
    pub fn labels(&self) -> Vec<(Side, TermSpec)> {
        self.formation
            .iter()
            .map(|t| (Side::Formation, *t))
            .chain(self.persistence.iter().map(|t| (Side::Persistence, *t)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Formation,
    Persistence,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Formation => "formation",
            Side::Persistence => "persistence",
        })
    }
}

/// Statistic values aligned to a term list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StatVector(pub Vec<f64>);

impl StatVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, theta: &[f64]) -> f64 {
        self.0.iter().zip(theta).map(|(g, t)| g * t).sum()
    }
}

fn check_nodes(y: &SmallGraph, attrs: &AttributeTable) -> Result<(), StatsError> {
    if y.n() == attrs.n() {
        Ok(())
    } else {
        Err(StatsError::NodeCountMismatch {
            graph: y.n(),
            attrs: attrs.n(),
        })
    }
}

fn triangle_count(y: &SmallGraph) -> i64 {
    let adj = y.adjacency();
    let mut count = 0;
    for (i, j) in y.edges() {
        let above = !((1u16 << (j + 1)) - 1);
        count += i64::from((adj[i] & adj[j] & above).count_ones());
    }
    count
}

/// Exact integer count behind a term's value.
pub(crate) fn term_count(term: &TermSpec, y: &SmallGraph, attrs: &AttributeTable) -> i64 {
    match term {
        TermSpec::Triangles => triangle_count(y),
        TermSpec::Edges => y.edge_count() as i64,
        _ => y.edges().map(|(i, j)| term.dyad_weight(i, j, attrs)).sum(),
    }
}

pub fn eval_term(term: &TermSpec, y: &SmallGraph, attrs: &AttributeTable) -> Result<f64, StatsError> {
    check_nodes(y, attrs)?;
    Ok(term.scale() * term_count(term, y, attrs) as f64)
}

pub fn eval_vector(
    terms: &[TermSpec],
    y: &SmallGraph,
    attrs: &AttributeTable,
) -> Result<StatVector, StatsError> {
    check_nodes(y, attrs)?;
    Ok(StatVector(
        terms
            .iter()
            .map(|t| t.scale() * term_count(t, y, attrs) as f64)
            .collect(),
    ))
}

/// `eval_term(y + d) - eval_term(y - d)`, computed from the dyad's
/// neighbourhood only.
pub fn change_statistic(
    term: &TermSpec,
    y: &SmallGraph,
    d: DyadIndex,
    attrs: &AttributeTable,
) -> Result<f64, StatsError> {
    check_nodes(y, attrs)?;
    let raw = match term {
        TermSpec::Triangles => {
            let adj = y.adjacency();
            i64::from((adj[d.i] & adj[d.j]).count_ones())
        }
        _ => term.dyad_weight(d.i, d.j, attrs),
    };
    Ok(term.scale() * raw as f64)
}

/// True when a term's change statistic ignores every other dyad's state.
pub fn is_dyadic_independent(term: &TermSpec) -> bool {
    !matches!(term, TermSpec::Triangles)
}

/// Term list compiled against one attribute table for fast repeated
/// evaluation over a sample space.
#[derive(Debug, Clone)]
pub(crate) struct TermKernel {
    n: usize,
    dim: usize,
    /// `weights[k * dim + c]`: integer increment of column `c` from dyad `k`
    /// (zero for triangle columns).
    weights: Vec<i64>,
    triangle_cols: Vec<usize>,
    scales: Vec<f64>,
}

impl TermKernel {
    pub(crate) fn new(
        terms: &[TermSpec],
        n: usize,
        attrs: &AttributeTable,
    ) -> Result<Self, StatsError> {
        if attrs.n() != n {
            return Err(StatsError::NodeCountMismatch {
                graph: n,
                attrs: attrs.n(),
            });
        }
        let dim = terms.len();
        let dyads = crate::graph::dyad_count(n);
        let mut weights = vec![0i64; dyads * dim];
        for k in 0..dyads {
            let (i, j) = pair_of(n, k);
            for (c, t) in terms.iter().enumerate() {
                weights[k * dim + c] = t.dyad_weight(i, j, attrs);
            }
        }
        Ok(TermKernel {
            n,
            dim,
            weights,
            triangle_cols: terms
                .iter()
                .enumerate()
                .filter(|(_, t)| matches!(t, TermSpec::Triangles))
                .map(|(c, _)| c)
                .collect(),
            scales: terms.iter().map(TermSpec::scale).collect(),
        })
    }

    pub(crate) fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub(crate) fn dyad_weights(&self, k: usize) -> &[i64] {
        &self.weights[k * self.dim..(k + 1) * self.dim]
    }

    /// Integer counts of every term on a graph mask.
    pub(crate) fn counts(&self, mask: u64, out: &mut [i64]) {
        out.iter_mut().for_each(|v| *v = 0);
        for k in BitIter(mask) {
            for (o, w) in out.iter_mut().zip(self.dyad_weights(k)) {
                *o += w;
            }
        }
        if !self.triangle_cols.is_empty() {
            let tri = triangle_count(&SmallGraph::from_mask_unchecked(self.n, mask));
            for &c in &self.triangle_cols {
                out[c] = tri;
            }
        }
    }

    /// Adds `sign` times the change statistic of dyad `k` to `acc`, where
    /// `adj` is the adjacency with dyad `k` absent.
    pub(crate) fn apply_toggle(&self, adj: &[u16; MAX_NODES], k: usize, sign: i64, acc: &mut [i64]) {
        for (a, w) in acc.iter_mut().zip(self.dyad_weights(k)) {
            *a += sign * w;
        }
        if !self.triangle_cols.is_empty() {
            let (i, j) = pair_of(self.n, k);
            let common = i64::from((adj[i] & adj[j]).count_ones());
            for &c in &self.triangle_cols {
                acc[c] += sign * common;
            }
        }
    }
}
