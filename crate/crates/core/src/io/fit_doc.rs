//! The `stergm-fit/1` JSON document: a [`FitResult`] with its Wald table and
//! optional per-time fits.
//!
//! Numbers are written in the shortest form that parses back to the same
//! `f64`, so reading a document reproduces the in-memory values exactly.
//! Missing estimates and standard errors (nonexistent MLEs, singular
//! information) are `null`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inference::{wald_tests, FitResult, InferenceError, WaldTest};

pub const FIT_SCHEMA: &str = "stergm-fit/1";

#[derive(Debug, Error)]
pub enum FitDocError {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("expected schema \"{FIT_SCHEMA}\", found \"{0}\"")]
    Schema(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerTimeEntry {
    pub t: i64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fit: Option<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wald: Option<Vec<Option<WaldTest>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl PerTimeEntry {
    pub fn new(t: i64, result: &Result<FitResult, InferenceError>) -> Self {
        match result {
            Ok(fit) => PerTimeEntry {
                t,
                wald: Some(wald_tests(fit)),
                fit: Some(fit.clone()),
                error: None,
            },
            Err(e) => PerTimeEntry {
                t,
                fit: None,
                wald: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub schema_version: String,
    #[serde(flatten)]
    pub fit: FitResult,
    pub wald: Vec<Option<WaldTest>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_time: Option<Vec<PerTimeEntry>>,
}

impl FitDocument {
    pub fn new(fit: FitResult, per_time: Option<Vec<PerTimeEntry>>) -> Self {
        FitDocument {
            schema_version: FIT_SCHEMA.to_string(),
            wald: wald_tests(&fit),
            fit,
            per_time,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fit documents always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, FitDocError> {
        let doc: FitDocument = serde_json::from_str(text)?;
        if doc.schema_version != FIT_SCHEMA {
            return Err(FitDocError::Schema(doc.schema_version));
        }
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{maximize, FitConfig};
    use crate::stats::ModelSpec;
    use crate::testutil::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let panel = random_panel(&mut rng, 6, 5, 3);
        let spec = ModelSpec::symmetric(full_menu());
        let fit = maximize(&panel, &spec, &FitConfig::default()).unwrap();
        let per = crate::inference::fit_per_time(&panel, &spec, &FitConfig::default()).unwrap();
        let doc = FitDocument::new(fit, Some(per.iter().map(|(t, r)| PerTimeEntry::new(*t, r)).collect()));
        let back = FitDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.fit.loglik.to_bits(), doc.fit.loglik.to_bits());
        for (a, b) in back.fit.cov.iter().flatten().zip(doc.fit.cov.iter().flatten()) {
            assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
        }
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let panel = random_panel(&mut rng, 2, 4, 2);
        let fit = maximize(&panel, &ModelSpec::default(), &FitConfig::default()).unwrap();
        let text = FitDocument::new(fit, None).to_json().replace(FIT_SCHEMA, "stergm-fit/0");
        assert!(matches!(FitDocument::from_json(&text), Err(FitDocError::Schema(_))));
    }
}
