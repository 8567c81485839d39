//! Proximity operators, projections and Moreau-Yosida envelopes.
//!
//! Throughout, the prox of `f` with parameter `λ` is
//! `prox_f^λ(x) = argmin_u f(u) + ‖u - x‖² / (2λ)`.

mod oracle;
mod potentials;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ComplexVector, ImageVector, Potential};
use crate::ops::Dictionary;

pub use oracle::{brute_force_prox, OracleProx, ORACLE_MAX_DIM, ORACLE_RESIDUAL_TOL};
pub use potentials::{L1Potential, QuadraticPotential, WaveletL1Prior, ZeroPotential};

/// Elementwise `sign(u) · max(|u| - threshold, 0)`.
pub fn soft_threshold(u: &[f64], threshold: f64) -> Result<Vec<f64>> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "soft threshold must be non-negative, got {threshold}"
        )));
    }
    Ok(u.iter().map(|&v| soft_scalar(v, threshold)).collect())
}

#[inline]
pub(crate) fn soft_scalar(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}

/// Prox of `μ ‖Ψ† x‖₁` with parameter `λ` for an orthogonal dictionary:
/// `x + Ψ(soft_{λμ}(Ψ†x) - Ψ†x)`.
pub fn l1_wavelet_prox(
    x: &ImageVector,
    mu: f64,
    lambda_my: f64,
    dict: &dyn Dictionary,
) -> Result<ImageVector> {
    if !(mu >= 0.0 && lambda_my > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "l1 prox needs mu >= 0 and lambda > 0, got mu={mu}, lambda={lambda_my}"
        )));
    }
    if mu == 0.0 {
        return Ok(x.clone());
    }
    let coeffs = dict.analysis(x)?;
    let threshold = lambda_my * mu;
    let shrunk: Vec<f64> = coeffs.iter().map(|&c| soft_scalar(c, threshold)).collect();
    dict.synthesis(&shrunk)
}

/// Euclidean projection onto the ball `‖z - center‖₂ ≤ radius`.
pub fn l2_ball_project(
    z: &ComplexVector,
    center: &ComplexVector,
    radius: f64,
) -> Result<ComplexVector> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    let diff = z.sub(center)?;
    let dist = diff.norm();
    if dist <= radius {
        return Ok(z.clone());
    }
    center.add_scaled(radius / dist, &diff)
}

/// Real-vector version of [`l2_ball_project`].
pub fn l2_ball_project_real(z: &[f64], center: &[f64], radius: f64) -> Result<Vec<f64>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    if z.len() != center.len() {
        return Err(Error::shape(center.len(), z.len()));
    }
    let dist = linalg::distance(z, center);
    if dist <= radius {
        return Ok(z.to_vec());
    }
    let s = radius / dist;
    Ok(center
        .iter()
        .zip(z)
        .map(|(c, v)| c + s * (v - c))
        .collect())
}

/// Moreau-Yosida envelope `f^λ(x) = min_u f(u) + ‖u - x‖² / (2λ)` of a
/// potential with a prox.
#[derive(Clone)]
pub struct MoreauEnvelope {
    base: Arc<dyn Potential>,
    lambda_my: f64,
}

impl MoreauEnvelope {
    pub fn new(base: Arc<dyn Potential>, lambda_my: f64) -> Result<Self> {
        if !base.has_prox() {
            return Err(Error::Unsupported("prox"));
        }
        if !(lambda_my > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Moreau-Yosida parameter must be positive, got {lambda_my}"
            )));
        }
        Ok(Self { base, lambda_my })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda_my
    }

    pub fn base(&self) -> &Arc<dyn Potential> {
        &self.base
    }
}

impl std::fmt::Debug for MoreauEnvelope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MoreauEnvelope")
            .field("lambda_my", &self.lambda_my)
            .finish_non_exhaustive()
    }
}

/// `f(p) + ‖p - x‖² / (2λ)` with `p = prox_f^λ(x)`.
pub fn moreau_eval(env: &MoreauEnvelope, x: &ImageVector) -> Result<f64> {
    let p = env.base.prox(x, env.lambda_my)?;
    let d = p.distance(x);
    Ok(env.base.eval(&p) + d * d / (2.0 * env.lambda_my))
}

/// `(x - prox_f^λ(x)) / λ`.
pub fn moreau_grad(env: &MoreauEnvelope, x: &ImageVector) -> Result<ImageVector> {
    let p = env.base.prox(x, env.lambda_my)?;
    let inv = 1.0 / env.lambda_my;
    x.with_data(
        x.as_slice()
            .iter()
            .zip(p.as_slice())
            .map(|(a, b)| (a - b) * inv)
            .collect(),
    )
}

impl Potential for MoreauEnvelope {
    fn eval(&self, x: &ImageVector) -> f64 {
        moreau_eval(self, x).unwrap_or(f64::NAN)
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn gradient(&self, x: &ImageVector) -> Result<ImageVector> {
        moreau_grad(self, x)
    }
}
