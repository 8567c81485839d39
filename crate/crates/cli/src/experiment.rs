//! Assembling and running one experiment: truth, operator, simulated data,
//! prior model, nested sampling and the written artifacts.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use proxnest::denoiser::{Denoiser, ExternalDenoiser, GaussianSmoothingDenoiser};
use proxnest::kernels::{sample_prior_chains, KernelSpec, KernelVariant};
use proxnest::likelihood::{GaussianLikelihood, PrimalDualConfig};
use proxnest::nested::{run_nested, NestedOptions, NestedRunResult};
use proxnest::ops::{make_mask, IdentityOperator, MaskedFourierOperator, MeasurementOperator, WaveletDictionary};
use proxnest::prox::{QuadraticPotential, WaveletL1Prior};
use proxnest::{rng, ComplexVector, ImageVector};
use sha2::{Digest, Sha256};

use crate::config::{DenoiserSpec, ExperimentConfig, ImageSource, ModelSpec, OperatorSpec};
use crate::error::{CliError, CliResult};
use crate::image_io;
use crate::report::MetricsReport;
use crate::simulate::{blobs, reconstruction_snr, simulate_observation};

/// Simulated data shared by every model run on the same configuration.
pub struct Observation {
    pub truth: ImageVector,
    pub operator: Arc<dyn MeasurementOperator>,
    pub data: ComplexVector,
    pub sigma: f64,
    pub data_seed_hash: String,
}

pub fn load_truth(source: &ImageSource) -> CliResult<ImageVector> {
    match source {
        ImageSource::Synthetic {
            rows,
            cols,
            blobs: count,
            seed,
        } => blobs((*rows, *cols), *count, *seed),
        ImageSource::File { path } => image_io::read_image(path),
    }
}

pub fn build_operator(spec: &OperatorSpec, shape: (usize, usize)) -> CliResult<Arc<dyn MeasurementOperator>> {
    Ok(match spec {
        OperatorSpec::Identity => Arc::new(IdentityOperator::new(shape)),
        OperatorSpec::MaskedFourier { fraction, mask_seed } => {
            let mask = make_mask(shape, *fraction, *mask_seed)?;
            Arc::new(MaskedFourierOperator::new(shape, mask)?)
        }
    })
}

fn data_hash(shape: (usize, usize), data: &ComplexVector, sigma: f64) -> String {
    let mut h = Sha256::new();
    h.update((shape.0 as u64).to_le_bytes());
    h.update((shape.1 as u64).to_le_bytes());
    for v in data.re().iter().chain(data.im()) {
        h.update(v.to_le_bytes());
    }
    h.update(sigma.to_le_bytes());
    hex::encode(h.finalize())
}

pub fn observe(cfg: &ExperimentConfig) -> CliResult<Observation> {
    let truth = load_truth(&cfg.image)?;
    let operator = build_operator(&cfg.operator, truth.shape())?;
    let mut r = rng::seeded(cfg.noise.seed);
    let (data, sigma) = simulate_observation(&truth, operator.as_ref(), cfg.snr_db, &mut r, cfg.noise.enabled)?;
    let data_seed_hash = data_hash(truth.shape(), &data, sigma);
    Ok(Observation {
        truth,
        operator,
        data,
        sigma,
        data_seed_hash,
    })
}

pub fn build_likelihood(cfg: &ExperimentConfig, obs: &Observation) -> CliResult<GaussianLikelihood> {
    let like = GaussianLikelihood::new(obs.data.clone(), obs.operator.clone(), obs.sigma)?;
    let mut pd = PrimalDualConfig::for_operator(obs.operator.as_ref());
    if let Some(n) = cfg.sampler.projection_max_iters {
        pd.max_iters = n;
    }
    if let Some(t) = cfg.sampler.projection_tol {
        pd.tol = t;
    }
    Ok(like.with_primal_dual(pd)?)
}

fn build_denoiser(spec: &DenoiserSpec) -> CliResult<Arc<dyn Denoiser>> {
    Ok(match spec {
        DenoiserSpec::Smoothing { width, epsilon } => Arc::new(GaussianSmoothingDenoiser::new(*width, *epsilon)?),
        DenoiserSpec::External {
            command,
            args,
            epsilon,
            timeout_ms,
        } => Arc::new(ExternalDenoiser::spawn(
            command,
            args,
            *epsilon,
            Duration::from_millis(*timeout_ms),
        )?),
    })
}

/// Kernel template for the configured prior, without a constraint. The
/// run's noise level is replaced by `sigma`.
pub fn build_template(cfg: &ExperimentConfig, shape: (usize, usize), sigma: f64) -> CliResult<KernelSpec> {
    let mut run = cfg.run.clone();
    run.sigma = sigma;
    let spec = match &cfg.model {
        ModelSpec::WaveletL1 { family, levels, mu } => {
            let mu = mu.unwrap_or(run.mu);
            run.mu = mu;
            let dict = Arc::new(WaveletDictionary::new(*family, *levels, shape)?);
            KernelSpec::new(KernelVariant::LangevinMyPrior, run, shape).with_prior(Arc::new(WaveletL1Prior::new(mu, dict)?))
        }
        ModelSpec::DataDriven { denoiser } => {
            KernelSpec::new(KernelVariant::DataDriven, run, shape).with_denoiser(build_denoiser(denoiser)?)
        }
        ModelSpec::Gaussian { variance } => {
            let prior = QuadraticPotential::new(ImageVector::zeros(shape), *variance)?;
            KernelSpec::new(KernelVariant::LangevinSmoothPrior, run, shape).with_prior(Arc::new(prior))
        }
    };
    let spec = spec
        .with_mh_correction(cfg.mh_correction())
        .with_lambdas(cfg.sampler.lambda_prior, cfg.sampler.lambda_constraint);
    spec.validate()?;
    Ok(spec)
}

/// Closed-form log-evidence where available: a Gaussian prior observed
/// through the identity, `Σ log N(y_j; 0, σ² + s²)`.
pub fn analytic_log_evidence(cfg: &ExperimentConfig, obs: &Observation) -> Option<f64> {
    match (&cfg.model, &cfg.operator) {
        (ModelSpec::Gaussian { variance }, OperatorSpec::Identity) => {
            let v = obs.sigma * obs.sigma + variance;
            Some(
                obs.data
                    .re()
                    .iter()
                    .map(|y| -0.5 * y * y / v - 0.5 * (2.0 * std::f64::consts::PI * v).ln())
                    .sum(),
            )
        }
        _ => None,
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn write_artifacts(dir: &Path, result: &NestedRunResult, report: &MetricsReport, trace: bool) -> CliResult<()> {
    image_io::write_image(&dir.join("posterior_mean.bin"), &result.posterior_mean)?;
    image_io::write_csv(&dir.join("posterior_mean.csv"), &result.posterior_mean)?;

    let mut log = String::new();
    for rec in &result.run_log {
        log.push_str(&serde_json::to_string(rec).expect("log record serialises"));
        log.push('\n');
    }
    write_text(&dir.join("run_log.jsonl"), &log)?;

    if trace {
        let mut csv = String::from("iteration,log_likelihood,accepted\n");
        for t in &result.trace {
            csv.push_str(&format!("{},{},{}\n", t.iteration, t.log_like, t.accepted as u8));
        }
        write_text(&dir.join("chain_trace.csv"), &csv)?;
    }
    let text = serde_json::to_string_pretty(report).expect("report serialises");
    write_text(&dir.join("report.json"), &text)
}

fn write_status(dir: &Path, outcome: &CliResult<MetricsReport>) {
    let status = match outcome {
        Ok(_) => serde_json::json!({"status": "complete"}),
        Err(e) => serde_json::json!({"status": "failed", "error": e.to_string()}),
    };
    if let Ok(mut f) = fs::File::create(dir.join("status.json")) {
        let _ = writeln!(f, "{status}");
    }
}

/// Simulates the data, runs nested sampling and writes all artifacts under
/// `cfg.output_dir`. `status.json` records whether the outputs are complete.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<MetricsReport> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    let outcome = run_in(cfg, dir);
    write_status(dir, &outcome);
    outcome
}

fn run_in(cfg: &ExperimentConfig, dir: &Path) -> CliResult<MetricsReport> {
    let start = Instant::now();
    let obs = observe(cfg)?;
    let like = Arc::new(build_likelihood(cfg, &obs)?);
    let template = build_template(cfg, obs.truth.shape(), obs.sigma)?;
    let opts = NestedOptions {
        weight_rule: cfg.sampler.weight_rule,
        record_trace: cfg.sampler.chain_trace,
        execution: cfg.sampler.execution,
    };
    let result = run_nested(&template, like, &opts)?;
    let d = &result.diagnostics;
    log::info!(
        "{}: log Z = {:.4} ± {:.4}, acceptance {:.3}, {} projection failures",
        cfg.label(),
        result.log_evidence,
        result.log_evidence_std,
        d.acceptance_rate(),
        d.projection_failures
    );
    let report = MetricsReport {
        model: cfg.label(),
        log_evidence: result.log_evidence,
        log_evidence_std: result.log_evidence_std,
        information: result.information,
        snr_db_reconstruction: reconstruction_snr(&obs.truth, &result.posterior_mean),
        analytic_log_evidence: analytic_log_evidence(cfg, &obs),
        sigma: obs.sigma,
        data_seed_hash: obs.data_seed_hash.clone(),
        n_live: cfg.run.n_live,
        n_dead: cfg.run.n_dead,
        wall_time_s: start.elapsed().as_secs_f64(),
        diagnostics: result.diagnostics.clone(),
    };
    write_artifacts(dir, &result, &report, cfg.sampler.chain_trace)?;
    Ok(report)
}

/// `count` independent draws from the configured prior (no likelihood).
pub fn sample_model_prior(cfg: &ExperimentConfig, count: usize) -> CliResult<Vec<ImageVector>> {
    cfg.validate()?;
    let truth = load_truth(&cfg.image)?;
    let template = build_template(cfg, truth.shape(), cfg.run.sigma)?;
    Ok(sample_prior_chains(&template, count, cfg.run.rng_seed, 1, cfg.sampler.execution)?)
}
