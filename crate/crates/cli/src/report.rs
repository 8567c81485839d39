//! Run reports and model comparison.

use std::fs;
use std::path::Path;

use proxnest::nested::KernelDiagnostics;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub log_evidence: f64,
    pub log_evidence_std: f64,
    /// Information gain from prior to posterior, in nats.
    pub information: f64,
    /// `20·log₁₀(‖truth‖ / ‖truth - posterior mean‖)`
    pub snr_db_reconstruction: f64,
    /// Closed-form evidence, when the model admits one.
    pub analytic_log_evidence: Option<f64>,
    /// Noise standard deviation used by the likelihood.
    pub sigma: f64,
    /// SHA-256 of the observed data and noise level.
    pub data_seed_hash: String,
    pub n_live: usize,
    pub n_dead: usize,
    pub wall_time_s: f64,
    pub diagnostics: KernelDiagnostics,
}

impl MetricsReport {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    PrefersA,
    PrefersB,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub model_a: String,
    pub model_b: String,
    /// `log Z_a - log Z_b`
    pub log_bayes_factor: f64,
    /// `√(σ_a² + σ_b²)`
    pub combined_error: f64,
    pub verdict: Verdict,
    /// Name of the preferred model, absent when inconclusive.
    pub preferred: Option<String>,
}

/// A model is preferred when `|log BF|` exceeds this many combined errors.
pub const DECISION_THRESHOLD: f64 = 3.0;

pub fn compare_models(a: &MetricsReport, b: &MetricsReport) -> CliResult<Comparison> {
    if a.data_seed_hash != b.data_seed_hash {
        return Err(CliError::DataMismatch(
            a.data_seed_hash.clone(),
            b.data_seed_hash.clone(),
        ));
    }
    let log_bayes_factor = a.log_evidence - b.log_evidence;
    let combined_error = a.log_evidence_std.hypot(b.log_evidence_std);
    let (verdict, preferred) = if log_bayes_factor.abs() > DECISION_THRESHOLD * combined_error {
        if log_bayes_factor > 0.0 {
            (Verdict::PrefersA, Some(a.model.clone()))
        } else {
            (Verdict::PrefersB, Some(b.model.clone()))
        }
    } else {
        (Verdict::Inconclusive, None)
    };
    Ok(Comparison {
        model_a: a.model.clone(),
        model_b: b.model.clone(),
        log_bayes_factor,
        combined_error,
        verdict,
        preferred,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(model: &str, log_z: f64, std: f64) -> MetricsReport {
        MetricsReport {
            model: model.into(),
            log_evidence: log_z,
            log_evidence_std: std,
            information: 0.0,
            snr_db_reconstruction: 0.0,
            analytic_log_evidence: None,
            sigma: 1.0,
            data_seed_hash: "abc".into(),
            n_live: 10,
            n_dead: 10,
            wall_time_s: 0.0,
            diagnostics: KernelDiagnostics::default(),
        }
    }

    #[test]
    fn identical_reports_are_inconclusive() {
        let a = report("a", -10.0, 0.5);
        let c = compare_models(&a, &a).unwrap();
        assert_eq!(c.log_bayes_factor, 0.0);
        assert_eq!(c.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn large_gap_prefers_higher_evidence() {
        let c = compare_models(&report("dd", -1350.0, 1.0), &report("wav", -2960.0, 1.0)).unwrap();
        assert_eq!(c.log_bayes_factor, 1610.0);
        assert_eq!(c.verdict, Verdict::PrefersA);
        assert_eq!(c.preferred.as_deref(), Some("dd"));
        let c = compare_models(&report("wav", -2960.0, 1.0), &report("dd", -1350.0, 1.0)).unwrap();
        assert_eq!(c.verdict, Verdict::PrefersB);
    }

    #[test]
    fn small_gap_is_inconclusive() {
        let c = compare_models(&report("a", -10.0, 1.0), &report("b", -13.0, 1.0)).unwrap();
        assert!(c.log_bayes_factor.abs() < 3.0 * c.combined_error);
        assert_eq!(c.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn different_data_rejected() {
        let a = report("a", -1.0, 0.1);
        let mut b = a.clone();
        b.data_seed_hash = "def".into();
        assert!(matches!(compare_models(&a, &b), Err(CliError::DataMismatch(..))));
    }
}
