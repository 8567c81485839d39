//! Langevin kernels for sampling a prior restricted to a likelihood ball.
//!
//! Each step has the form `x' = x + d_prior(x) + d_constraint(x) + √δ·w`.
//! The constraint drift `-(δ/2λ)(x - P(x))` uses the projection `P` onto the
//! ball, so it vanishes inside the ball and pulls outside points back. The
//! prior drift depends on the variant:
//!
//! * smooth prior: `-(δ/2)∇f(x)`
//! * proximal prior: `-(δ/2λ)(x - prox_f^λ(x))`, the Moreau envelope gradient
//! * data-driven: `-(αδ/2ε)(x - D_ε(x))`, the Tweedie score of a denoiser
//!
//! With Metropolis-Hastings correction the step is used as a proposal with
//! mean `x + drift(x)` and covariance `δI`, targeting the exact prior
//! restricted to the open ball. Proposals outside the ball are always
//! rejected.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::batch::{try_map_indexed, Execution};
use crate::denoiser::Denoiser;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{validate_config, ImageVector, LikelihoodConstraint, Potential, RunConfig, Shape};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    LangevinSmoothPrior,
    LangevinMyPrior,
    DataDriven,
}

/// Everything a kernel step needs.
#[derive(Clone)]
pub struct KernelSpec {
    pub variant: KernelVariant,
    pub prior: Option<Arc<dyn Potential>>,
    /// `None` samples the unconstrained prior.
    pub constraint: Option<LikelihoodConstraint>,
    pub denoiser: Option<Arc<dyn Denoiser>>,
    pub cfg: RunConfig,
    pub mh_correction: bool,
    /// Envelope parameter for the prior term; defaults to `cfg.lambda_my`.
    pub lambda_prior: Option<f64>,
    /// Envelope parameter for the constraint term; defaults to `cfg.lambda_my`.
    pub lambda_constraint: Option<f64>,
    pub shape: Shape,
}

impl std::fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelSpec")
            .field("variant", &self.variant)
            .field("constraint", &self.constraint)
            .field("cfg", &self.cfg)
            .field("mh_correction", &self.mh_correction)
            .field("shape", &self.shape)
            .finish_non_exhaustive()
    }
}

impl KernelSpec {
    pub fn new(variant: KernelVariant, cfg: RunConfig, shape: Shape) -> Self {
        Self {
            variant,
            prior: None,
            constraint: None,
            denoiser: None,
            cfg,
            mh_correction: false,
            lambda_prior: None,
            lambda_constraint: None,
            shape,
        }
    }

    pub fn with_prior(mut self, prior: Arc<dyn Potential>) -> Self {
        self.prior = Some(prior);
        self
    }

    pub fn with_denoiser(mut self, denoiser: Arc<dyn Denoiser>) -> Self {
        self.denoiser = Some(denoiser);
        self
    }

    pub fn with_constraint(mut self, constraint: LikelihoodConstraint) -> Self {
        self.constraint = Some(constraint);
        self
    }

    pub fn without_constraint(mut self) -> Self {
        self.constraint = None;
        self
    }

    pub fn with_mh_correction(mut self, on: bool) -> Self {
        self.mh_correction = on;
        self
    }

    pub fn with_lambdas(mut self, prior: Option<f64>, constraint: Option<f64>) -> Self {
        self.lambda_prior = prior;
        self.lambda_constraint = constraint;
        self
    }

    pub fn lambda_prior(&self) -> f64 {
        self.lambda_prior.unwrap_or(self.cfg.lambda_my)
    }

    pub fn lambda_constraint(&self) -> f64 {
        self.lambda_constraint.unwrap_or(self.cfg.lambda_my)
    }

    pub fn dim(&self) -> usize {
        self.shape.0 * self.shape.1
    }

    pub fn validate(&self) -> Result<()> {
        validate_config(&self.cfg)?;
        if self.dim() == 0 {
            return Err(Error::config("shape", "sample shape must be non-empty"));
        }
        for (field, lam) in [
            ("lambda_prior", self.lambda_prior),
            ("lambda_constraint", self.lambda_constraint),
        ] {
            if let Some(l) = lam {
                if !(l > 0.0 && l.is_finite()) {
                    return Err(Error::config(field, format!("{field} must be positive")));
                }
            }
        }
        match self.variant {
            KernelVariant::LangevinSmoothPrior => match &self.prior {
                Some(p) if p.has_gradient() => {}
                _ => {
                    return Err(Error::config(
                        "prior",
                        "smooth-prior kernel needs a prior with a gradient",
                    ))
                }
            },
            KernelVariant::LangevinMyPrior => match &self.prior {
                Some(p) if p.has_prox() => {}
                _ => {
                    return Err(Error::config(
                        "prior",
                        "proximal-prior kernel needs a prior with a prox",
                    ))
                }
            },
            KernelVariant::DataDriven => {
                let d = self.denoiser.as_ref().ok_or_else(|| {
                    Error::config("denoiser", "data-driven kernel needs a denoiser")
                })?;
                let eps = d.epsilon();
                if (self.cfg.epsilon - eps).abs() > 1e-12 * eps.abs().max(1.0) {
                    return Err(Error::config(
                        "epsilon",
                        format!(
                            "epsilon {} does not match the denoiser's noise level {eps}",
                            self.cfg.epsilon
                        ),
                    ));
                }
                if self.mh_correction {
                    return Err(Error::config(
                        "mh_correction",
                        "data-driven kernel has no prior density and cannot be corrected",
                    ));
                }
            }
        }
        if self.mh_correction && self.prior.is_none() {
            return Err(Error::config(
                "mh_correction",
                "correction needs an evaluatable prior",
            ));
        }
        let ratio = self.cfg.delta / (2.0 * self.lambda_constraint());
        if ratio > 1.0 {
            log::warn!("delta/(2 lambda) = {ratio} > 1: constraint drift overshoots the projection");
        }
        if self.variant == KernelVariant::LangevinMyPrior {
            let ratio = self.cfg.delta / (2.0 * self.lambda_prior());
            if ratio > 1.0 {
                log::warn!("delta/(2 lambda) = {ratio} > 1: prior drift overshoots the prox");
            }
        }
        Ok(())
    }
}

/// Output of an uncorrected kernel step.
#[derive(Debug, Clone)]
pub struct Step {
    pub x: ImageVector,
    /// False when the likelihood-ball projection hit its iteration limit.
    pub projection_converged: bool,
}

/// Output of one chain transition, corrected or not.
#[derive(Debug, Clone)]
pub struct Transition {
    pub x: ImageVector,
    pub accepted: bool,
    pub projection_converged: bool,
}

fn require_prior(spec: &KernelSpec) -> Result<&Arc<dyn Potential>> {
    spec.prior
        .as_ref()
        .ok_or_else(|| Error::config("prior", "kernel needs a prior"))
}

fn scaled(x: &ImageVector, v: Vec<f64>, factor: f64) -> Result<ImageVector> {
    x.with_data(v.into_iter().map(|a| a * factor).collect())
}

/// Prior drift of `variant` at `x`.
pub fn prior_drift(x: &ImageVector, spec: &KernelSpec, variant: KernelVariant) -> Result<ImageVector> {
    let delta = spec.cfg.delta;
    match variant {
        KernelVariant::LangevinSmoothPrior => {
            let g = require_prior(spec)?.gradient(x)?;
            scaled(x, g.into_vec(), -0.5 * delta)
        }
        KernelVariant::LangevinMyPrior => {
            let lam = spec.lambda_prior();
            let p = require_prior(spec)?.prox(x, lam)?;
            scaled(x, linalg::sub(x.as_slice(), p.as_slice()), -delta / (2.0 * lam))
        }
        KernelVariant::DataDriven => {
            let d = spec
                .denoiser
                .as_ref()
                .ok_or_else(|| Error::config("denoiser", "data-driven kernel needs a denoiser"))?;
            let eps = d.epsilon();
            let dx = d.apply(x)?;
            x.check_shape(dx.shape())?;
            scaled(
                x,
                linalg::sub(x.as_slice(), dx.as_slice()),
                -spec.cfg.alpha * delta / (2.0 * eps),
            )
        }
    }
}

/// Constraint drift `-(δ/2λ)(x - P(x))` and whether the projection
/// converged. Exactly zero inside the ball or without a constraint.
pub fn constraint_drift(x: &ImageVector, spec: &KernelSpec) -> Result<(ImageVector, bool)> {
    let Some(c) = &spec.constraint else {
        return Ok((ImageVector::zeros(x.shape()), true));
    };
    if c.contains(x) {
        return Ok((ImageVector::zeros(x.shape()), true));
    }
    let p = c.project(x)?;
    let lam = spec.lambda_constraint();
    let d = scaled(
        x,
        linalg::sub(x.as_slice(), p.x.as_slice()),
        -spec.cfg.delta / (2.0 * lam),
    )?;
    Ok((d, p.converged))
}

fn total_drift(x: &ImageVector, spec: &KernelSpec, variant: KernelVariant) -> Result<(Vec<f64>, bool)> {
    let mut d = prior_drift(x, spec, variant)?.into_vec();
    let (c, converged) = constraint_drift(x, spec)?;
    linalg::axpy(1.0, c.as_slice(), &mut d);
    Ok((d, converged))
}

fn draw_noise<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect()
}

fn advance(x: &ImageVector, drift: &[f64], delta: f64, noise: &[f64]) -> Result<ImageVector> {
    if noise.len() != x.len() {
        return Err(Error::shape(x.len(), noise.len()));
    }
    let s = delta.sqrt();
    x.with_data(
        x.as_slice()
            .iter()
            .zip(drift)
            .zip(noise)
            .map(|((a, d), w)| a + d + s * w)
            .collect(),
    )
}

fn step_with_noise(
    x: &ImageVector,
    spec: &KernelSpec,
    variant: KernelVariant,
    noise: &[f64],
) -> Result<Step> {
    let (d, projection_converged) = total_drift(x, spec, variant)?;
    Ok(Step {
        x: advance(x, &d, spec.cfg.delta, noise)?,
        projection_converged,
    })
}

/// `x - (δ/2)∇f(x) - (δ/2λ)(x - P(x)) + √δ·w`
pub fn step_smooth_prior<R: Rng + ?Sized>(x: &ImageVector, spec: &KernelSpec, rng: &mut R) -> Result<Step> {
    let noise = draw_noise(rng, x.len());
    step_smooth_prior_with_noise(x, spec, &noise)
}

/// [`step_smooth_prior`] with a caller-supplied standard-normal draw `w`.
pub fn step_smooth_prior_with_noise(x: &ImageVector, spec: &KernelSpec, noise: &[f64]) -> Result<Step> {
    step_with_noise(x, spec, KernelVariant::LangevinSmoothPrior, noise)
}

/// `x - (δ/2λ)(x - prox_f^λ(x)) - (δ/2λ)(x - P(x)) + √δ·w`
pub fn step_my_prior<R: Rng + ?Sized>(x: &ImageVector, spec: &KernelSpec, rng: &mut R) -> Result<Step> {
    let noise = draw_noise(rng, x.len());
    step_my_prior_with_noise(x, spec, &noise)
}

pub fn step_my_prior_with_noise(x: &ImageVector, spec: &KernelSpec, noise: &[f64]) -> Result<Step> {
    step_with_noise(x, spec, KernelVariant::LangevinMyPrior, noise)
}

/// `x - (αδ/2ε)(x - D_ε(x)) - (δ/2λ)(x - P(x)) + √δ·w`
pub fn step_data_driven<R: Rng + ?Sized>(x: &ImageVector, spec: &KernelSpec, rng: &mut R) -> Result<Step> {
    let noise = draw_noise(rng, x.len());
    step_data_driven_with_noise(x, spec, &noise)
}

pub fn step_data_driven_with_noise(x: &ImageVector, spec: &KernelSpec, noise: &[f64]) -> Result<Step> {
    step_with_noise(x, spec, KernelVariant::DataDriven, noise)
}

/// `log π(x') + log q(x | x') - log π(x) - log q(x' | x)` for the proposal
/// `q(· | x) = N(x + drift(x), δI)`.
fn mh_log_ratio(
    x_old: &ImageVector,
    drift_old: &[f64],
    x_new: &ImageVector,
    spec: &KernelSpec,
) -> Result<f64> {
    let prior = require_prior(spec)?;
    let (drift_new, _) = total_drift(x_new, spec, spec.variant)?;
    let delta = spec.cfg.delta;
    let (a, b) = (x_old.as_slice(), x_new.as_slice());
    let forward: f64 = b
        .iter()
        .zip(a)
        .zip(drift_old)
        .map(|((bn, ao), d)| (bn - ao - d).powi(2))
        .sum();
    let backward: f64 = a
        .iter()
        .zip(b)
        .zip(&drift_new)
        .map(|((ao, bn), d)| (ao - bn - d).powi(2))
        .sum();
    Ok(prior.eval(x_old) - prior.eval(x_new) + (forward - backward) / (2.0 * delta))
}

fn mh_decide(
    x_old: &ImageVector,
    drift_old: &[f64],
    x_proposed: ImageVector,
    spec: &KernelSpec,
    u: f64,
) -> Result<(bool, ImageVector)> {
    if let Some(c) = &spec.constraint {
        if !c.contains(&x_proposed) {
            return Ok((false, x_old.clone()));
        }
    }
    let log_ratio = mh_log_ratio(x_old, drift_old, &x_proposed, spec)?;
    if u.ln() < log_ratio {
        Ok((true, x_proposed))
    } else {
        Ok((false, x_old.clone()))
    }
}

/// Metropolis-Hastings decision for moving from `x_old` to `x_proposed`
/// under the active kernel's proposal. One uniform is drawn from `rng`
/// whatever the outcome.
pub fn mh_accept<R: Rng + ?Sized>(
    x_old: &ImageVector,
    x_proposed: &ImageVector,
    spec: &KernelSpec,
    rng: &mut R,
) -> Result<(bool, ImageVector)> {
    if spec.variant == KernelVariant::DataDriven {
        return Err(Error::config(
            "mh_correction",
            "data-driven kernel has no prior density and cannot be corrected",
        ));
    }
    let u: f64 = rng.random();
    let (drift_old, _) = total_drift(x_old, spec, spec.variant)?;
    mh_decide(x_old, &drift_old, x_proposed.clone(), spec, u)
}

/// One step of the active kernel, corrected when `spec.mh_correction` is set.
pub fn transition<R: Rng + ?Sized>(x: &ImageVector, spec: &KernelSpec, rng: &mut R) -> Result<Transition> {
    let (drift, projection_converged) = total_drift(x, spec, spec.variant)?;
    let noise = draw_noise(rng, x.len());
    let proposed = advance(x, &drift, spec.cfg.delta, &noise)?;
    if !spec.mh_correction {
        return Ok(Transition {
            x: proposed,
            accepted: true,
            projection_converged,
        });
    }
    let u: f64 = rng.random();
    let (accepted, x) = mh_decide(x, &drift, proposed, spec, u)?;
    Ok(Transition {
        x,
        accepted,
        projection_converged,
    })
}

/// Runs the active kernel without its constraint from the zero image and
/// returns `n_samples` states: after `burn_in` unadjusted steps, every
/// `thinning`-th step of the kernel as configured.
pub fn sample_prior<R: Rng + ?Sized>(spec: &KernelSpec, n_samples: usize, rng: &mut R) -> Result<Vec<ImageVector>> {
    sample_prior_from(&ImageVector::zeros(spec.shape), spec, n_samples, rng)
}

/// [`sample_prior`] started from `x0`.
pub fn sample_prior_from<R: Rng + ?Sized>(
    x0: &ImageVector,
    spec: &KernelSpec,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<ImageVector>> {
    let free = spec.clone().without_constraint();
    free.validate()?;
    x0.check_shape(free.shape)?;
    // Warm up without the accept/reject step: an MH chain started at the
    // mode of a non-smooth prior in high dimension almost never leaves it.
    let warm = free.clone().with_mh_correction(false);
    let mut x = x0.clone();
    for _ in 0..free.cfg.burn_in {
        x = transition(&x, &warm, rng)?.x;
    }
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        for _ in 0..free.cfg.thinning {
            x = transition(&x, &free, rng)?.x;
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// One prior sample from each of `n_chains` independent chains. Chain `i`
/// uses random stream `first_stream + i` of `seed`, so the result does not
/// depend on `exec`.
pub fn sample_prior_chains(
    spec: &KernelSpec,
    n_chains: usize,
    seed: u64,
    first_stream: u64,
    exec: Execution,
) -> Result<Vec<ImageVector>> {
    try_map_indexed(n_chains, exec, |i| {
        let mut r = rng::stream(seed, first_stream + i as u64);
        Ok(sample_prior(spec, 1, &mut r)?.remove(0))
    })
}
