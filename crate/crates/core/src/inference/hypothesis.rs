use serde::{Deserialize, Serialize};
use statrs::function::{erf::erfc, gamma::checked_gamma_ur};

use crate::stats::TermSpec;

use super::{FitResult, InferenceError};

/// Negative deviances down to this size are rounding and clamp to zero.
pub const DEVIANCE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldTest {
    pub z: f64,
    pub p_value: f64,
    pub stars: String,
}

/// Significance stars: `***` below 0.001, `**` below 0.01, `*` below 0.05.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Two-sided standard-normal tail probability of `|z|`.
pub fn normal_two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// Per-parameter Wald tests; `None` where the estimate or its standard
/// error is unavailable.
pub fn wald_tests(fit: &FitResult) -> Vec<Option<WaldTest>> {
    fit.theta
        .iter()
        .zip(&fit.se)
        .map(|(est, se)| match (est, se) {
            (Some(est), Some(se)) if *se > 0.0 => {
                let z = est / se;
                let p = normal_two_sided_p(z);
                Some(WaldTest {
                    z,
                    p_value: p,
                    stars: stars(p).to_string(),
                })
            }
            _ => None,
        })
        .collect()
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chisq_sf(x: f64, df: u32) -> Result<f64, InferenceError> {
    if df == 0 {
        return Err(InferenceError::ZeroDegreesOfFreedom);
    }
    if !(x >= 0.0) || x.is_infinite() {
        return Err(InferenceError::InvalidStatistic(x));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    checked_gamma_ur(df as f64 / 2.0, x / 2.0).map_err(|_| InferenceError::InvalidStatistic(x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrTestResult {
    pub deviance: f64,
    pub df: usize,
    pub p_value: f64,
}

/// `true` when every term of `small` appears in `big` at least as often.
fn is_sub_multiset(small: &[TermSpec], big: &[TermSpec]) -> bool {
    let mut used = vec![false; big.len()];
    small.iter().all(|t| {
        match big.iter().enumerate().position(|(i, b)| !used[i] && b == t) {
            Some(i) => {
                used[i] = true;
                true
            }
            None => false,
        }
    })
}

/// Likelihood-ratio test of a reduced model nested in a full model fitted
/// to the same data.
///
/// Term order does not matter; nesting means each side's reduced terms are a
/// sub-multiset of the full model's terms on that side. Identical models
/// give deviance 0 on 0 degrees of freedom and p-value 1.
pub fn lr_test(reduced: &FitResult, full: &FitResult) -> Result<LrTestResult, InferenceError> {
    if reduced.data_digest != full.data_digest {
        return Err(InferenceError::DataMismatch);
    }
    let (r, f) = (&reduced.spec, &full.spec);
    if !is_sub_multiset(&r.formation, &f.formation) || !is_sub_multiset(&r.persistence, &f.persistence) {
        return Err(InferenceError::NotNested);
    }
    let df = full.n_params - reduced.n_params;
    let mut deviance = reduced.residual_deviance - full.residual_deviance;
    if deviance < 0.0 {
        if deviance < -DEVIANCE_SLACK {
            return Err(InferenceError::NegativeDeviance(deviance));
        }
        deviance = 0.0;
    }
    let p_value = if df == 0 { 1.0 } else { chisq_sf(deviance, df as u32)? };
    Ok(LrTestResult { deviance, df, p_value })
}
