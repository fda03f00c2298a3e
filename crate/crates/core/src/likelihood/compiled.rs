use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::graph::{Panel, TransitionView};
use crate::stats::{ModelSpec, Side, TermKernel, TermSpec};

use super::table::{SideEval, SpaceTable};
use super::{LikelihoodError, LogLikReport, StatBounds, TermBounds, DEFAULT_STATE_BUDGET};

/// Formation and persistence tables for one transition.
#[derive(Debug, Clone)]
pub(crate) struct CompiledTransition {
    pub game: usize,
    pub t: i64,
    pub formation: SpaceTable,
    pub persistence: SpaceTable,
}

impl CompiledTransition {
    pub(crate) fn new(
        game: usize,
        tv: &TransitionView<'_>,
        spec: &ModelSpec,
        budget: u64,
    ) -> Result<Self, LikelihoodError> {
        let n = tv.n();
        let fk = TermKernel::new(&spec.formation, n, tv.attrs)?;
        let pk = TermKernel::new(&spec.persistence, n, tv.attrs)?;
        Ok(CompiledTransition {
            game,
            t: tv.t,
            formation: SpaceTable::build(Side::Formation, &tv.y_prev, &tv.y_plus(), &fk, budget)?,
            persistence: SpaceTable::build(Side::Persistence, &tv.y_prev, &tv.y_minus(), &pk, budget)?,
        })
    }

    pub(crate) fn evaluate(&self, theta: &[f64], d_plus: usize, want_cov: bool) -> (SideEval, SideEval) {
        let (tp, tm) = theta.split_at(d_plus);
        (
            self.formation.evaluate(tp, want_cov),
            self.persistence.evaluate(tm, want_cov),
        )
    }
}

/// A panel with every transition's sample spaces enumerated once, ready for
/// repeated likelihood evaluation at different parameter values.
///
/// Parameters are addressed as one flat vector: formation terms first, then
/// persistence terms, each in model order.
#[derive(Debug, Clone)]
pub struct CompiledPanel {
    spec: ModelSpec,
    digest: String,
    transitions: Vec<CompiledTransition>,
}

impl CompiledPanel {
    pub fn new(panel: &Panel, spec: &ModelSpec) -> Result<Self, LikelihoodError> {
        Self::with_budget(panel, spec, DEFAULT_STATE_BUDGET)
    }

    /// `budget` caps the number of states enumerated per normalizer.
    pub fn with_budget(panel: &Panel, spec: &ModelSpec, budget: u64) -> Result<Self, LikelihoodError> {
        let views: Vec<(usize, TransitionView<'_>)> = panel.transitions().collect();
        let transitions = views
            .par_iter()
            .map(|(g, tv)| CompiledTransition::new(*g, tv, spec, budget))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CompiledPanel {
            spec: spec.clone(),
            digest: crate::io::panel_doc::digest(panel),
            transitions,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Content hash of the source panel (see [`crate::io::panel_doc::digest`]).
    /// Time slices carry the panel digest suffixed with `@t=<t>`.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    /// Distinct target time indices, ascending.
    pub fn times(&self) -> Vec<i64> {
        let mut ts: Vec<i64> = self.transitions.iter().map(|t| t.t).collect();
        ts.sort_unstable();
        ts.dedup();
        ts
    }

    /// Transitions whose target time is `t`.
    pub fn slice_at(&self, t: i64) -> CompiledPanel {
        CompiledPanel {
            spec: self.spec.clone(),
            digest: format!("{}@t={t}", self.digest),
            transitions: self.transitions.iter().filter(|tr| tr.t == t).cloned().collect(),
        }
    }

    /// Reorders games; used to check order invariance.
    pub fn with_game_order(&self, order: &[usize]) -> CompiledPanel {
        let transitions = order
            .iter()
            .flat_map(|&g| self.transitions.iter().filter(move |tr| tr.game == g).cloned())
            .collect();
        CompiledPanel {
            spec: self.spec.clone(),
            digest: self.digest.clone(),
            transitions,
        }
    }

    /// Limiting model with the flagged parameters sent to the extreme their
    /// observed statistics sit on. Flagged entries of `theta` are ignored by
    /// the result (every remaining state matches the observed count there).
    pub fn restricted(&self, fixed: &[bool]) -> CompiledPanel {
        let d_plus = self.spec.formation.len();
        let (fp, fm) = fixed.split_at(d_plus);
        CompiledPanel {
            spec: self.spec.clone(),
            digest: self.digest.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|tr| CompiledTransition {
                    game: tr.game,
                    t: tr.t,
                    formation: tr.formation.restrict(fp),
                    persistence: tr.persistence.restrict(fm),
                })
                .collect(),
        }
    }

    fn check_theta(&self, theta: &[f64]) -> Result<(), LikelihoodError> {
        if theta.len() != self.dim() {
            return Err(LikelihoodError::ThetaLength {
                expected: self.dim(),
                found: theta.len(),
            });
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(LikelihoodError::NonFiniteTheta);
        }
        Ok(())
    }

    fn evals(&self, theta: &[f64], want_cov: bool) -> Vec<(SideEval, SideEval)> {
        let d_plus = self.spec.formation.len();
        self.transitions
            .par_iter()
            .map(|tr| tr.evaluate(theta, d_plus, want_cov))
            .collect()
    }

    /// Log-likelihood and its gradient; transitions are reduced in panel
    /// order so results do not depend on the thread count.
    pub fn loglik_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>), LikelihoodError> {
        self.check_theta(theta)?;
        let d_plus = self.spec.formation.len();
        let evals = self.evals(theta, false);
        let mut loglik = 0.0;
        let mut grad = vec![0.0; self.dim()];
        for (tr, (f, p)) in self.transitions.iter().zip(&evals) {
            loglik += f.loglik + p.loglik;
            accumulate_gradient(&mut grad[..d_plus], tr.formation.observed(), &f.mean);
            accumulate_gradient(&mut grad[d_plus..], tr.persistence.observed(), &p.mean);
        }
        Ok((loglik, grad))
    }

    pub fn loglik(&self, theta: &[f64]) -> Result<f64, LikelihoodError> {
        Ok(self.loglik_and_gradient(theta)?.0)
    }

    /// Log-likelihood, gradient, per-transition expectations and exact
    /// Fisher information (the summed statistic covariances).
    pub fn report(&self, theta: &[f64]) -> Result<LogLikReport, LikelihoodError> {
        self.check_theta(theta)?;
        let d = self.dim();
        let d_plus = self.spec.formation.len();
        let d_minus = d - d_plus;
        let evals = self.evals(theta, true);
        let mut loglik = 0.0;
        let mut gradient = vec![0.0; d];
        let mut fisher = DMatrix::zeros(d, d);
        let mut expected_stats = Vec::with_capacity(evals.len());
        for (tr, (f, p)) in self.transitions.iter().zip(&evals) {
            loglik += f.loglik + p.loglik;
            accumulate_gradient(&mut gradient[..d_plus], tr.formation.observed(), &f.mean);
            accumulate_gradient(&mut gradient[d_plus..], tr.persistence.observed(), &p.mean);
            for a in 0..d_plus {
                for b in 0..d_plus {
                    fisher[(a, b)] += f.cov[a * d_plus + b];
                }
            }
            for a in 0..d_minus {
                for b in 0..d_minus {
                    fisher[(d_plus + a, d_plus + b)] += p.cov[a * d_minus + b];
                }
            }
            expected_stats.push(f.mean.iter().chain(&p.mean).copied().collect());
        }
        Ok(LogLikReport {
            loglik,
            gradient,
            expected_stats,
            fisher_info: fisher,
        })
    }

    /// Negative Hessian of the log-likelihood by central differences of the
    /// analytic gradient, symmetrized.
    pub fn numerical_information(&self, theta: &[f64], h: f64) -> Result<DMatrix<f64>, LikelihoodError> {
        self.check_theta(theta)?;
        let d = self.dim();
        let mut hess = DMatrix::zeros(d, d);
        let mut x = theta.to_vec();
        for j in 0..d {
            x[j] = theta[j] + h;
            let (_, gp) = self.loglik_and_gradient(&x)?;
            x[j] = theta[j] - h;
            let (_, gm) = self.loglik_and_gradient(&x)?;
            x[j] = theta[j];
            for i in 0..d {
                hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        Ok(-(&hess + hess.transpose()) * 0.5)
    }

    /// Attainable range and observed value of every total statistic.
    pub fn bounds(&self) -> StatBounds {
        let side = |terms: &[TermSpec], pick: &dyn Fn(&CompiledTransition) -> &SpaceTable| {
            let mut lo = vec![0i64; terms.len()];
            let mut hi = vec![0i64; terms.len()];
            let mut obs = vec![0i64; terms.len()];
            for tr in &self.transitions {
                let table = pick(tr);
                for (c, (l, h)) in table.count_range().into_iter().enumerate() {
                    lo[c] += l;
                    hi[c] += h;
                    obs[c] += table.observed_key()[c];
                }
            }
            terms
                .iter()
                .enumerate()
                .map(|(c, term)| TermBounds::new(*term, lo[c], hi[c], obs[c]))
                .collect()
        };
        StatBounds {
            formation: side(&self.spec.formation, &|tr| &tr.formation),
            persistence: side(&self.spec.persistence, &|tr| &tr.persistence),
        }
    }

    /// Per-transition `(game, t, formation rows, persistence rows)`, for diagnostics.
    pub fn table_sizes(&self) -> Vec<(usize, i64, usize, usize)> {
        self.transitions
            .iter()
            .map(|tr| (tr.game, tr.t, tr.formation.rows(), tr.persistence.rows()))
            .collect()
    }
}

fn accumulate_gradient(grad: &mut [f64], observed: &[f64], mean: &[f64]) {
    for ((g, o), m) in grad.iter_mut().zip(observed).zip(mean) {
        *g += o - m;
    }
}
