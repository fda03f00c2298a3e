use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::Panel;
use crate::likelihood::{CompiledPanel, LikelihoodError, ThetaVector, DEFAULT_STATE_BUDGET};
use crate::stats::ModelSpec;

use super::bfgs::{self, OptimStatus, Settings};
use super::InferenceError;

/// Eigenvalue ratio below which the information matrix counts as singular.
const SINGULAR_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Starting point; `None` starts from all zeros.
    pub init: Option<ThetaVector>,
    /// Infinity-norm threshold on the gradient.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// A fit with any `|θ_k|` at or above this is reported as diverged.
    pub param_cap: f64,
    pub existence_check: bool,
    /// Cap on enumerated states per normalizer.
    pub budget: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            init: None,
            grad_tol: 1e-8,
            max_iters: 500,
            param_cap: 25.0,
            existence_check: true,
            budget: DEFAULT_STATE_BUDGET,
        }
    }
}

impl FitConfig {
    pub fn validate(&self, spec: &ModelSpec) -> Result<(), InferenceError> {
        let bad = |m: &str| Err(InferenceError::InvalidConfig(m.to_string()));
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if !(self.param_cap > 0.0) {
            return bad("param_cap must be positive");
        }
        if let Some(init) = &self.init {
            init.validate(spec)?;
        }
        Ok(())
    }
}

/// Whether the MLE of a parameter exists, and if not, which way it runs off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Existence {
    Ok,
    /// Observed total at the minimum attainable value: the MLE is −∞.
    AtLowerBoundary,
    /// Observed total at the maximum attainable value: the MLE is +∞.
    AtUpperBoundary,
}

impl Existence {
    pub fn is_ok(&self) -> bool {
        matches!(self, Existence::Ok)
    }
}

/// Result of one maximum-likelihood fit. Parameter-indexed vectors run over
/// formation terms then persistence terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    /// SHA-256 of the canonical panel document the fit was computed from.
    pub data_digest: String,
    pub transitions: usize,
    /// `None` where the MLE does not exist.
    pub theta: Vec<Option<f64>>,
    /// `None` where the MLE does not exist or the information is singular.
    pub se: Vec<Option<f64>>,
    /// Inverse Fisher information over the parameters with finite estimates.
    pub cov: Vec<Vec<Option<f64>>>,
    /// Maximized log-likelihood. With nonexistent MLEs this is the
    /// supremum, attained in the limit.
    pub loglik: f64,
    pub residual_deviance: f64,
    pub n_params: usize,
    pub converged: bool,
    pub status: OptimStatus,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub fisher_singular: bool,
    pub existence_flags: Vec<Existence>,
}

impl FitResult {
    pub fn all_exist(&self) -> bool {
        self.existence_flags.iter().all(Existence::is_ok)
    }

    /// Estimates as a parameter vector, when every MLE exists.
    pub fn theta_hat(&self) -> Option<ThetaVector> {
        let flat: Option<Vec<f64>> = self.theta.iter().copied().collect();
        ThetaVector::from_flat(&self.spec, &flat?).ok()
    }

    /// Converged, every MLE exists and standard errors are available.
    pub fn is_clean(&self) -> bool {
        self.converged && self.all_exist() && !self.fisher_singular
    }
}

/// Fits `spec` to `panel` by BFGS on the exact log-likelihood.
pub fn maximize(panel: &Panel, spec: &ModelSpec, config: &FitConfig) -> Result<FitResult, InferenceError> {
    config.validate(spec)?;
    let compiled = CompiledPanel::with_budget(panel, spec, config.budget)?;
    maximize_compiled(&compiled, config)
}

/// Flags terms whose observed totals sit on an attainable extreme, repeating
/// on the limiting model until no new flags appear.
fn existence_flags(compiled: &CompiledPanel) -> Vec<Existence> {
    let d = compiled.dim();
    let mut flags = vec![Existence::Ok; d];
    loop {
        let fixed: Vec<bool> = flags.iter().map(|f| !f.is_ok()).collect();
        let bounds = compiled.restricted(&fixed).bounds();
        let mut changed = false;
        for (k, b) in bounds.iter().enumerate() {
            if !flags[k].is_ok() {
                continue;
            }
            if b.at_min {
                flags[k] = Existence::AtLowerBoundary;
                changed = true;
            } else if b.at_max {
                flags[k] = Existence::AtUpperBoundary;
                changed = true;
            }
        }
        if !changed {
            return flags;
        }
    }
}

pub fn maximize_compiled(compiled: &CompiledPanel, config: &FitConfig) -> Result<FitResult, InferenceError> {
    let spec = compiled.spec();
    config.validate(spec)?;
    let d = compiled.dim();
    let flags = if config.existence_check {
        existence_flags(compiled)
    } else {
        vec![Existence::Ok; d]
    };
    let fixed: Vec<bool> = flags.iter().map(|f| !f.is_ok()).collect();
    let free: Vec<usize> = (0..d).filter(|&k| !fixed[k]).collect();
    let model = if fixed.iter().any(|&f| f) {
        compiled.restricted(&fixed)
    } else {
        compiled.clone()
    };

    // flagged coordinates stay at zero; the limiting model ignores them
    let init = config.init.as_ref().map(ThetaVector::to_flat).unwrap_or_else(|| vec![0.0; d]);
    let embed = |z: &[f64]| {
        let mut full = vec![0.0; d];
        for (&k, &v) in free.iter().zip(z) {
            full[k] = v;
        }
        full
    };
    let objective = |z: &[f64]| -> Result<(f64, Vec<f64>), LikelihoodError> {
        let (f, g) = model.loglik_and_gradient(&embed(z))?;
        Ok((f, free.iter().map(|&k| g[k]).collect()))
    };
    let z0: Vec<f64> = free.iter().map(|&k| init[k]).collect();
    let settings = Settings {
        grad_tol: config.grad_tol,
        max_iters: config.max_iters,
        param_cap: config.param_cap,
    };
    let out = bfgs::maximize(objective, &z0, &settings)?;
    if !out.f.is_finite() {
        return Err(InferenceError::NonFiniteLoglik);
    }

    let report = model.report(&embed(&out.x))?;
    let m = free.len();
    let info = DMatrix::from_fn(m, m, |a, b| report.fisher_info[(free[a], free[b])]);
    let inverse = invert_information(&info);
    let fisher_singular = m > 0 && inverse.is_none();

    let mut theta = vec![None; d];
    let mut se = vec![None; d];
    let mut cov = vec![vec![None; d]; d];
    for (a, &k) in free.iter().enumerate() {
        theta[k] = Some(out.x[a]);
        if let Some(inv) = &inverse {
            se[k] = Some(inv[(a, a)].sqrt());
            for (b, &l) in free.iter().enumerate() {
                cov[k][l] = Some(inv[(a, b)]);
            }
        }
    }
    let capped = out.x.iter().any(|v| v.abs() >= config.param_cap);
    Ok(FitResult {
        spec: spec.clone(),
        data_digest: compiled.digest().to_string(),
        transitions: compiled.transition_count(),
        theta,
        se,
        cov,
        loglik: out.f,
        residual_deviance: -2.0 * out.f,
        n_params: d,
        converged: out.status == OptimStatus::GradTol && !capped,
        status: out.status,
        iterations: out.iterations,
        gradient_norm: out.grad.iter().fold(0.0, |a: f64, g| a.max(g.abs())),
        fisher_singular,
        existence_flags: flags,
    })
}

/// Symmetric inverse, or `None` when the smallest eigenvalue is negligible
/// against the largest.
fn invert_information(info: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let m = info.nrows();
    if m == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(info.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= SINGULAR_RATIO * max {
        return None;
    }
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    let inv = &eig.eigenvectors * inv_diag * eig.eigenvectors.transpose();
    Some((&inv + inv.transpose()) * 0.5)
}

/// One fit per target time, using only the transitions into that time.
/// A failing slice records its error without affecting the others.
pub fn fit_per_time(
    panel: &Panel,
    spec: &ModelSpec,
    config: &FitConfig,
) -> Result<Vec<(i64, Result<FitResult, InferenceError>)>, InferenceError> {
    config.validate(spec)?;
    let compiled = CompiledPanel::with_budget(panel, spec, config.budget)?;
    Ok(fit_per_time_compiled(&compiled, config))
}

pub fn fit_per_time_compiled(
    compiled: &CompiledPanel,
    config: &FitConfig,
) -> Vec<(i64, Result<FitResult, InferenceError>)> {
    compiled
        .times()
        .into_par_iter()
        .map(|t| (t, maximize_compiled(&compiled.slice_at(t), config)))
        .collect()
}
