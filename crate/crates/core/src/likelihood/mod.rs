//! Exact transition probabilities by enumeration of formation and
//! persistence spaces.
//!
//! For a transition `y_prev -> y_curr` with formation network `y+` and
//! persistence network `y-`,
//!
//! ```text
//! log P = [θ+·g+(y+) - log c+(θ+, y_prev)] + [θ-·g-(y-) - log c-(θ-, y_prev)]
//! ```
//!
//! where `c+` sums over all supersets of `y_prev` and `c-` over all subsets.
//! Normalizers are accumulated in the log domain with a max shift. Each
//! normalizer refuses to enumerate more than a configurable number of
//! states instead of approximating.

mod compiled;
pub(crate) mod table;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AttributeTable, DyadIndex, GraphError, Panel, SmallGraph, TransitionView};
use crate::stats::{change_statistic, eval_vector, ModelSpec, Side, StatsError, TermKernel, TermSpec};

pub use compiled::CompiledPanel;
use table::{log_sum_exp, space_size, SpaceTable};

/// Default cap on states per normalizer (2^24).
pub const DEFAULT_STATE_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LikelihoodError {
    #[error("sample space of 2^{free_dyads} states exceeds the enumeration budget of {budget}")]
    BudgetExceeded { free_dyads: usize, budget: u64 },
    #[error("parameter vector has length {found}, model has {expected} terms")]
    ThetaLength { expected: usize, found: usize },
    #[error("parameter vector contains a non-finite entry")]
    NonFiniteTheta,
    #[error("term `{0}` is not dyadic-independent")]
    NotDyadicIndependent(TermSpec),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Formation and persistence parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaVector {
    pub formation: Vec<f64>,
    pub persistence: Vec<f64>,
}

impl ThetaVector {
    pub fn new(formation: Vec<f64>, persistence: Vec<f64>) -> Self {
        ThetaVector {
            formation,
            persistence,
        }
    }

    pub fn zeros(spec: &ModelSpec) -> Self {
        ThetaVector {
            formation: vec![0.0; spec.formation.len()],
            persistence: vec![0.0; spec.persistence.len()],
        }
    }

    /// Splits a flat vector (formation first) according to `spec`.
    pub fn from_flat(spec: &ModelSpec, flat: &[f64]) -> Result<Self, LikelihoodError> {
        if flat.len() != spec.dim() {
            return Err(LikelihoodError::ThetaLength {
                expected: spec.dim(),
                found: flat.len(),
            });
        }
        let (f, p) = flat.split_at(spec.formation.len());
        Ok(ThetaVector::new(f.to_vec(), p.to_vec()))
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.formation.iter().chain(&self.persistence).copied().collect()
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<(), LikelihoodError> {
        for (have, want) in [
            (self.formation.len(), spec.formation.len()),
            (self.persistence.len(), spec.persistence.len()),
        ] {
            if have != want {
                return Err(LikelihoodError::ThetaLength {
                    expected: want,
                    found: have,
                });
            }
        }
        if self.to_flat().iter().any(|v| !v.is_finite()) {
            return Err(LikelihoodError::NonFiniteTheta);
        }
        Ok(())
    }
}

/// Panel log-likelihood with its first two derivatives.
#[derive(Debug, Clone)]
pub struct LogLikReport {
    pub loglik: f64,
    /// Observed minus expected statistics, summed over transitions.
    pub gradient: Vec<f64>,
    /// Expected statistics per transition, formation then persistence.
    pub expected_stats: Vec<Vec<f64>>,
    /// Summed statistic covariances (the negative Hessian).
    pub fisher_info: DMatrix<f64>,
}

/// Attainable range of one summed statistic over the product of all
/// transitions' sample spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermBounds {
    pub term: TermSpec,
    pub min: f64,
    pub max: f64,
    pub observed: f64,
    /// Observed total equals the minimum (compared on exact integer counts).
    pub at_min: bool,
    pub at_max: bool,
}

impl TermBounds {
    fn new(term: TermSpec, lo: i64, hi: i64, obs: i64) -> Self {
        let s = term.scale();
        TermBounds {
            term,
            min: s * lo as f64,
            max: s * hi as f64,
            observed: s * obs as f64,
            at_min: obs == lo,
            at_max: obs == hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatBounds {
    pub formation: Vec<TermBounds>,
    pub persistence: Vec<TermBounds>,
}

impl StatBounds {
    /// All terms in parameter order.
    pub fn iter(&self) -> impl Iterator<Item = &TermBounds> {
        self.formation.iter().chain(&self.persistence)
    }
}

fn side_normalizer(
    side: Side,
    theta: &[f64],
    y_prev: &SmallGraph,
    attrs: &AttributeTable,
    terms: &[TermSpec],
    budget: u64,
) -> Result<f64, LikelihoodError> {
    if theta.len() != terms.len() {
        return Err(LikelihoodError::ThetaLength {
            expected: terms.len(),
            found: theta.len(),
        });
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(LikelihoodError::NonFiniteTheta);
    }
    let kernel = TermKernel::new(terms, y_prev.n(), attrs)?;
    let table = SpaceTable::build(side, y_prev, y_prev, &kernel, budget)?;
    Ok(table.evaluate(theta, false).log_norm)
}

/// `log c+`: log-sum over all supersets of `y_prev` of `exp(θ+·g+)`.
pub fn formation_normalizer(
    theta_plus: &[f64],
    y_prev: &SmallGraph,
    attrs: &AttributeTable,
    terms: &[TermSpec],
) -> Result<f64, LikelihoodError> {
    formation_normalizer_with_budget(theta_plus, y_prev, attrs, terms, DEFAULT_STATE_BUDGET)
}

pub fn formation_normalizer_with_budget(
    theta_plus: &[f64],
    y_prev: &SmallGraph,
    attrs: &AttributeTable,
    terms: &[TermSpec],
    budget: u64,
) -> Result<f64, LikelihoodError> {
    side_normalizer(Side::Formation, theta_plus, y_prev, attrs, terms, budget)
}

/// `log c-`: log-sum over all subsets of `y_prev` of `exp(θ-·g-)`.
pub fn persistence_normalizer(
    theta_minus: &[f64],
    y_prev: &SmallGraph,
    attrs: &AttributeTable,
    terms: &[TermSpec],
) -> Result<f64, LikelihoodError> {
    persistence_normalizer_with_budget(theta_minus, y_prev, attrs, terms, DEFAULT_STATE_BUDGET)
}

pub fn persistence_normalizer_with_budget(
    theta_minus: &[f64],
    y_prev: &SmallGraph,
    attrs: &AttributeTable,
    terms: &[TermSpec],
    budget: u64,
) -> Result<f64, LikelihoodError> {
    side_normalizer(Side::Persistence, theta_minus, y_prev, attrs, terms, budget)
}

/// Log-probability of one transition under the separable model.
pub fn transition_loglik(
    theta: &ThetaVector,
    tv: &TransitionView<'_>,
    spec: &ModelSpec,
) -> Result<f64, LikelihoodError> {
    theta.validate(spec)?;
    let tr = compiled::CompiledTransition::new(0, tv, spec, DEFAULT_STATE_BUDGET)?;
    let (f, p) = tr.evaluate(&theta.to_flat(), spec.formation.len(), false);
    Ok(f.loglik + p.loglik)
}

/// Joint log-likelihood of every transition in the panel, with exact
/// gradient and Fisher information.
pub fn panel_loglik(
    theta: &ThetaVector,
    panel: &Panel,
    spec: &ModelSpec,
) -> Result<LogLikReport, LikelihoodError> {
    theta.validate(spec)?;
    CompiledPanel::new(panel, spec)?.report(&theta.to_flat())
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Product-of-Bernoullis evaluation, valid only when every term is
/// dyadic-independent: each free formation dyad and each persistence dyad
/// carries log-odds `θ·Δg(d)`.
pub fn dyadic_fastpath_loglik(
    theta: &ThetaVector,
    tv: &TransitionView<'_>,
    spec: &ModelSpec,
) -> Result<f64, LikelihoodError> {
    theta.validate(spec)?;
    if let Some(t) = spec
        .formation
        .iter()
        .chain(&spec.persistence)
        .find(|t| !t.is_dyadic_independent())
    {
        return Err(LikelihoodError::NotDyadicIndependent(*t));
    }
    let n = tv.n();
    let y_plus = tv.y_plus();
    let y_minus = tv.y_minus();
    let mut total = 0.0;
    for k in 0..tv.y_prev.dyad_count() {
        let d = DyadIndex::from_linear(k, n)?;
        let (terms, th, present) = if tv.y_prev.has_dyad(d) {
            (&spec.persistence, &theta.persistence, y_minus.has_dyad(d))
        } else {
            (&spec.formation, &theta.formation, y_plus.has_dyad(d))
        };
        let mut eta = 0.0;
        for (term, coef) in terms.iter().zip(th) {
            eta += coef * change_statistic(term, &tv.y_prev, d, tv.attrs)?;
        }
        total += if present { eta } else { 0.0 } - softplus(eta);
    }
    Ok(total)
}

/// The same transition probability written as a single temporal ERGM with
/// `θ* = (θ+, θ-)` and `g*(w) = (g+(y_prev ∪ w), g-(y_prev ∩ w))`,
/// normalized over all `2^D` candidate graphs `w`.
pub fn tergm_combined_loglik(
    theta: &ThetaVector,
    tv: &TransitionView<'_>,
    spec: &ModelSpec,
) -> Result<f64, LikelihoodError> {
    tergm_combined_loglik_with_budget(theta, tv, spec, DEFAULT_STATE_BUDGET)
}

pub fn tergm_combined_loglik_with_budget(
    theta: &ThetaVector,
    tv: &TransitionView<'_>,
    spec: &ModelSpec,
    budget: u64,
) -> Result<f64, LikelihoodError> {
    theta.validate(spec)?;
    let n = tv.n();
    let dyads = tv.y_prev.dyad_count();
    let states = match space_size(dyads as u32) {
        Some(s) if s <= budget => s,
        _ => {
            return Err(LikelihoodError::BudgetExceeded {
                free_dyads: dyads,
                budget,
            })
        }
    };
    let theta_star = theta.to_flat();
    let potential = |w: &SmallGraph| -> Result<f64, LikelihoodError> {
        let gp = eval_vector(&spec.formation, &tv.y_prev.union(w)?, tv.attrs)?;
        let gm = eval_vector(&spec.persistence, &tv.y_prev.intersection(w)?, tv.attrs)?;
        Ok(gp.values().iter().chain(gm.values()).zip(&theta_star).map(|(g, t)| g * t).sum())
    };
    let mut etas = Vec::with_capacity(states as usize);
    for mask in 0..states {
        etas.push(potential(&SmallGraph::from_mask(n, mask)?)?);
    }
    Ok(potential(&tv.y_curr)? - log_sum_exp(&etas))
}

/// Attainable ranges and observed totals of every model statistic.
pub fn stat_bounds(panel: &Panel, spec: &ModelSpec) -> Result<StatBounds, LikelihoodError> {
    Ok(CompiledPanel::new(panel, spec)?.bounds())
}
