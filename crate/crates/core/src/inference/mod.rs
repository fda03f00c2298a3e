//! Maximum-likelihood fitting, standard errors and tests.

mod bfgs;
mod fit;
mod hypothesis;

use thiserror::Error;

use crate::likelihood::LikelihoodError;

pub use bfgs::OptimStatus;
pub use fit::{fit_per_time, fit_per_time_compiled, maximize, maximize_compiled, Existence, FitConfig, FitResult};
pub use hypothesis::{
    chisq_sf, lr_test, normal_two_sided_p, stars, wald_tests, LrTestResult, WaldTest, DEVIANCE_SLACK,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
    #[error("log-likelihood is not finite")]
    NonFiniteLoglik,
    #[error("chi-square tail needs at least one degree of freedom")]
    ZeroDegreesOfFreedom,
    #[error("test statistic {0} is not a finite non-negative number")]
    InvalidStatistic(f64),
    #[error("the reduced model is not nested in the full model")]
    NotNested,
    #[error("the two fits were computed from different data")]
    DataMismatch,
    #[error("deviance {0} is negative beyond rounding; the reduced fit beats the full fit")]
    NegativeDeviance(f64),
    #[error(transparent)]
    Likelihood(#[from] LikelihoodError),
}
