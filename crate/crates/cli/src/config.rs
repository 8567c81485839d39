//! Experiment configuration, read from JSON.

use std::fs;
use std::path::{Path, PathBuf};

use proxnest::nested::WeightRule;
use proxnest::ops::WaveletFamily;
use proxnest::{validate_config, Execution, RunConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Name used for this model in reports; defaults to the model kind.
    #[serde(default)]
    pub label: Option<String>,
    pub image: ImageSource,
    pub operator: OperatorSpec,
    /// Data-space signal-to-noise ratio in dB; sets the noise level.
    pub snr_db: f64,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub model: ModelSpec,
    pub run: RunConfig,
    #[serde(default)]
    pub sampler: SamplerSpec,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ImageSource {
    /// Sum of Gaussian blobs with random centres, widths and amplitudes.
    Synthetic {
        rows: usize,
        cols: usize,
        #[serde(default = "default_blobs")]
        blobs: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Little-endian `f64` image with a JSON sidecar.
    File { path: PathBuf },
}

fn default_blobs() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Identity,
    /// Keeps `fraction` of the unitary 2-D Fourier coefficients, chosen with
    /// `mask_seed`.
    MaskedFourier { fraction: f64, mask_seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub seed: u64,
    /// When false the data are noiseless, though the likelihood still uses
    /// the noise level implied by `snr_db`.
    #[serde(default = "default_true")]
    pub enabled: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            enabled: true,
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `μ‖Ψ†x‖₁` prior; `mu` falls back to `run.mu`.
    WaveletL1 {
        family: WaveletFamily,
        levels: usize,
        #[serde(default)]
        mu: Option<f64>,
    },
    DataDriven { denoiser: DenoiserSpec },
    /// `N(0, variance·I)` prior, for validation against closed-form
    /// evidence.
    Gaussian {
        #[serde(default = "default_variance")]
        variance: f64,
    },
}

fn default_variance() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::WaveletL1 { .. } => "wavelet_l1",
            ModelSpec::DataDriven { .. } => "data_driven",
            ModelSpec::Gaussian { .. } => "gaussian",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DenoiserSpec {
    Smoothing {
        width: f64,
        epsilon: f64,
    },
    /// Child process speaking the framed denoiser protocol.
    External {
        command: PathBuf,
        #[serde(default)]
        args: Vec<String>,
        epsilon: f64,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
}

fn default_timeout_ms() -> u64 {
    30_000
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    /// Defaults to on for models with an evaluatable prior, off otherwise.
    #[serde(default)]
    pub mh_correction: Option<bool>,
    #[serde(default)]
    pub weight_rule: WeightRule,
    /// Write `chain_trace.csv`.
    #[serde(default)]
    pub chain_trace: bool,
    #[serde(default)]
    pub lambda_prior: Option<f64>,
    #[serde(default)]
    pub lambda_constraint: Option<f64>,
    #[serde(default)]
    pub projection_max_iters: Option<usize>,
    #[serde(default)]
    pub projection_tol: Option<f64>,
    #[serde(default)]
    pub execution: Execution,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.model.kind().to_string())
    }

    pub fn mh_correction(&self) -> bool {
        self.sampler
            .mh_correction
            .unwrap_or(!matches!(self.model, ModelSpec::DataDriven { .. }))
    }

    pub fn validate(&self) -> CliResult<()> {
        validate_config(&self.run).map_err(|e| invalid(format!("run: {e}")))?;
        if let ImageSource::Synthetic { rows, cols, blobs, .. } = &self.image {
            if *rows == 0 || *cols == 0 {
                return Err(invalid("synthetic image must have non-zero size"));
            }
            if *blobs == 0 {
                return Err(invalid("synthetic image needs at least one blob"));
            }
        }
        if let OperatorSpec::MaskedFourier { fraction, .. } = &self.operator {
            if !(*fraction > 0.0 && *fraction <= 1.0) {
                return Err(invalid(format!("fraction must lie in (0, 1], got {fraction}")));
            }
        }
        if !self.snr_db.is_finite() {
            return Err(invalid("snr_db must be finite"));
        }
        match &self.model {
            ModelSpec::WaveletL1 { levels, mu, .. } => {
                if *levels == 0 {
                    return Err(invalid("wavelet levels must be ≥ 1"));
                }
                let mu = mu.unwrap_or(self.run.mu);
                if !(mu > 0.0 && mu.is_finite()) {
                    return Err(invalid(format!("wavelet mu must be positive, got {mu}")));
                }
            }
            ModelSpec::DataDriven { denoiser } => {
                let eps = match denoiser {
                    DenoiserSpec::Smoothing { width, epsilon } => {
                        if !(*width > 0.0) {
                            return Err(invalid("smoothing width must be positive"));
                        }
                        *epsilon
                    }
                    DenoiserSpec::External { epsilon, .. } => *epsilon,
                };
                if (eps - self.run.epsilon).abs() > 1e-12 * eps.abs().max(1.0) {
                    return Err(invalid(format!(
                        "run.epsilon {} must equal the denoiser's epsilon {eps}",
                        self.run.epsilon
                    )));
                }
                if self.sampler.mh_correction == Some(true) {
                    return Err(invalid("the data-driven model cannot use mh_correction"));
                }
            }
            ModelSpec::Gaussian { variance } => {
                if !(*variance > 0.0 && variance.is_finite()) {
                    return Err(invalid("gaussian prior variance must be positive"));
                }
            }
        }
        for (name, v) in [
            ("lambda_prior", self.sampler.lambda_prior),
            ("lambda_constraint", self.sampler.lambda_constraint),
            ("projection_tol", self.sampler.projection_tol),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(format!("{name} must be positive")));
                }
            }
        }
        if self.sampler.projection_max_iters == Some(0) {
            return Err(invalid("projection_max_iters must be ≥ 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> &'static str {
        r#"{
            "image": {"kind": "synthetic", "rows": 16, "cols": 16, "seed": 3},
            "operator": {"kind": "masked_fourier", "fraction": 0.5, "mask_seed": 1},
            "snr_db": 15.0,
            "noise": {"seed": 9},
            "model": {"kind": "wavelet_l1", "family": "daubechies6", "levels": 2, "mu": 20.0},
            "run": {"delta": 1e-3, "lambda_my": 5e-3, "n_live": 20, "n_dead": 200, "thinning": 10},
            "output_dir": "out"
        }"#
    }

    #[test]
    fn parses_and_validates() {
        let cfg: ExperimentConfig = serde_json::from_str(example()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.label(), "wavelet_l1");
        assert!(cfg.mh_correction());
        assert!(cfg.noise.enabled);
    }

    #[test]
    fn rejects_bad_fraction_and_unknown_fields() {
        let text = example().replace("0.5", "1.5");
        let cfg: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert!(cfg.validate().is_err());
        let text = example().replace("\"snr_db\"", "\"extra\": 1, \"snr_db\"");
        assert!(serde_json::from_str::<ExperimentConfig>(&text).is_err());
    }

    #[test]
    fn data_driven_epsilon_must_match() {
        let text = example().replace(
            r#"{"kind": "wavelet_l1", "family": "daubechies6", "levels": 2, "mu": 20.0}"#,
            r#"{"kind": "data_driven", "denoiser": {"kind": "smoothing", "width": 1.0, "epsilon": 0.1}}"#,
        );
        let cfg: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert!(cfg.validate().is_err());
        let mut ok = cfg.clone();
        ok.run.epsilon = 0.1;
        ok.validate().unwrap();
        assert!(!ok.mh_correction());
    }
}
