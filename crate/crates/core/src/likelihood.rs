//! Gaussian likelihoods and the projection onto their likelihood balls.
//!
//! For data `y = Φx + n` with white noise of standard deviation `σ`, the
//! constraint `misfit(x) = ‖y - Φx‖² / (2σ²) ≤ τ` is the preimage under `Φ`
//! of the data-space ball `‖z - y‖ ≤ √(2τσ²)`. Projecting onto it is the prox
//! of the constraint's characteristic function. When `ΦΦ† = I` the
//! projection has a closed form; otherwise it is computed by a primal-dual
//! iteration warm-started at the current sample.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ComplexVector, ConvexLikelihood, ImageVector, Potential, Projection};
use crate::ops::MeasurementOperator;
use crate::prox::l2_ball_project;

/// Slack used when deciding that a point already lies in the closed ball.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// Step parameters of the primal-dual projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimalDualConfig {
    /// Dual step.
    pub delta1: f64,
    /// Primal step.
    pub delta2: f64,
    /// Extrapolation weight.
    pub delta3: f64,
    pub max_iters: usize,
    /// Stop once `‖x_{i+1} - x_i‖ ≤ tol · ‖x_{i+1}‖`.
    pub tol: f64,
}

impl PrimalDualConfig {
    /// `delta1 = delta2 = 1/‖Φ‖`, `delta3 = 1`, 200 iterations, `tol = 1e-5`.
    pub fn for_operator(op: &dyn MeasurementOperator) -> Self {
        let step = 1.0 / op.operator_norm_bound().max(f64::MIN_POSITIVE);
        Self {
            delta1: step,
            delta2: step,
            delta3: 1.0,
            max_iters: 200,
            tol: 1e-5,
        }
    }

    pub fn validate(&self, op: &dyn MeasurementOperator) -> Result<()> {
        if !(self.delta1 > 0.0 && self.delta2 > 0.0) {
            return Err(Error::InvalidArgument(
                "primal-dual steps must be positive".into(),
            ));
        }
        let norm = op.operator_norm_bound();
        if self.delta1 * self.delta2 * norm * norm > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "primal-dual steps violate delta1·delta2·‖Φ‖² ≤ 1 (‖Φ‖ ≤ {norm})"
            )));
        }
        if !(0.0..=1.0).contains(&self.delta3) {
            return Err(Error::InvalidArgument("delta3 must lie in [0, 1]".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be ≥ 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        Ok(())
    }
}

/// `-log L(x) = ‖y - Φx‖² / (2σ²) + d · log(σ√(2π))`, where `d` counts the
/// real degrees of freedom of the data.
#[derive(Clone)]
pub struct GaussianLikelihood {
    y: ComplexVector,
    op: Arc<dyn MeasurementOperator>,
    sigma: f64,
    log_norm: f64,
    pd: PrimalDualConfig,
}

impl GaussianLikelihood {
    pub fn new(y: ComplexVector, op: Arc<dyn MeasurementOperator>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise level must be positive, got {sigma}"
            )));
        }
        if y.len() != op.output_dim() {
            return Err(Error::shape(op.output_dim(), y.len()));
        }
        if op.real_output() && y.im().iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidArgument(
                "operator has real output but data has an imaginary part".into(),
            ));
        }
        let dof = op.data_dof() as f64;
        let log_norm = dof * (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
        let pd = PrimalDualConfig::for_operator(op.as_ref());
        Ok(Self {
            y,
            op,
            sigma,
            log_norm,
            pd,
        })
    }

    pub fn with_primal_dual(mut self, pd: PrimalDualConfig) -> Result<Self> {
        pd.validate(self.op.as_ref())?;
        self.pd = pd;
        Ok(self)
    }

    pub fn data(&self) -> &ComplexVector {
        &self.y
    }

    pub fn operator(&self) -> &Arc<dyn MeasurementOperator> {
        &self.op
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn primal_dual(&self) -> &PrimalDualConfig {
        &self.pd
    }

    /// `‖y - Φx‖²`
    pub fn residual_norm_sqr(&self, x: &ImageVector) -> Result<f64> {
        Ok(self.y.sub(&self.op.forward(x)?)?.norm_sqr())
    }

    /// Data-space radius `√(2τσ²)` of the ball for threshold `tau`.
    pub fn ball_radius(&self, tau: f64) -> f64 {
        (2.0 * tau * self.sigma * self.sigma).sqrt()
    }
}

impl fmt::Debug for GaussianLikelihood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaussianLikelihood")
            .field("sigma", &self.sigma)
            .field("data_len", &self.y.len())
            .finish_non_exhaustive()
    }
}

impl Potential for GaussianLikelihood {
    fn eval(&self, x: &ImageVector) -> f64 {
        self.misfit(x) + self.log_norm
    }

    fn has_gradient(&self) -> bool {
        true
    }

    /// `Φ†(Φx - y) / σ²`
    fn gradient(&self, x: &ImageVector) -> Result<ImageVector> {
        let r = self.op.forward(x)?.sub(&self.y)?;
        let g = self.op.adjoint(&r)?;
        let inv = 1.0 / (self.sigma * self.sigma);
        g.with_data(g.as_slice().iter().map(|v| v * inv).collect())
    }
}

impl ConvexLikelihood for GaussianLikelihood {
    fn misfit(&self, x: &ImageVector) -> f64 {
        match self.residual_norm_sqr(x) {
            Ok(r2) => r2 / (2.0 * self.sigma * self.sigma),
            Err(_) => f64::NAN,
        }
    }

    fn log_normaliser(&self) -> f64 {
        self.log_norm
    }

    fn project(&self, x: &ImageVector, tau: f64) -> Result<Projection> {
        constraint_project(x, tau, self, &self.pd)
    }
}

/// `max(0, ‖y - Φx_out‖² - 2τσ²) / (2τσ²)`: the relative violation of the
/// ball constraint.
pub fn prox_residual(x_out: &ImageVector, tau: f64, like: &GaussianLikelihood) -> Result<f64> {
    let r2 = like.residual_norm_sqr(x_out)?;
    let bound = 2.0 * tau * like.sigma * like.sigma;
    Ok((r2 - bound).max(0.0) / bound)
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "likelihood threshold must be positive and finite, got {tau}"
        )));
    }
    Ok(())
}

/// Projects `x_current` onto `{x : ‖y - Φx‖² ≤ 2τσ²}`.
///
/// Feasible points are returned unchanged. Operators with orthonormal rows
/// use the closed form `x + Φ†(P(Φx) - Φx)`, with `P` the data-space ball
/// projection; all others use [`constraint_project_iterative`].
pub fn constraint_project(
    x_current: &ImageVector,
    tau: f64,
    like: &GaussianLikelihood,
    pd: &PrimalDualConfig,
) -> Result<Projection> {
    check_tau(tau)?;
    if like.misfit(x_current) <= tau + FEASIBILITY_SLACK {
        return Ok(Projection::unchanged(x_current));
    }
    if like.op.has_orthonormal_rows() {
        let phi_x = like.op.forward(x_current)?;
        let projected = l2_ball_project(&phi_x, &like.y, like.ball_radius(tau))?;
        let correction = like.op.adjoint(&projected.sub(&phi_x)?)?;
        let mut data = x_current.as_slice().to_vec();
        linalg::axpy(1.0, correction.as_slice(), &mut data);
        let x = x_current.with_data(data)?;
        let residual = prox_residual(&x, tau, like)?;
        return Ok(Projection {
            x,
            iterations: 0,
            residual,
            converged: true,
        });
    }
    constraint_project_iterative(x_current, tau, like, pd)
}

/// Primal-dual projection, used regardless of the operator structure.
///
/// Solves `min_x ½‖x - x₀‖² + χ_B(Φx)` for the data-space ball `B` with
/// the iteration
///
/// ```text
/// v      = z + δ₁ Φ x̄
/// z'     = v - δ₁ P_B(v / δ₁)
/// x'     = (x + δ₂ x₀ - δ₂ Φ†z') / (1 + δ₂)
/// x̄'     = x' + δ₃ (x' - x)
/// ```
///
/// started from `x = x̄ = x₀` and `z = 0`. With `δ₂ = 1` the primal update
/// is `(x₀ + x - Φ†z') / 2`. Converges for `δ₁δ₂‖Φ‖² ≤ 1`.
pub fn constraint_project_iterative(
    x_current: &ImageVector,
    tau: f64,
    like: &GaussianLikelihood,
    pd: &PrimalDualConfig,
) -> Result<Projection> {
    check_tau(tau)?;
    pd.validate(like.op.as_ref())?;
    if like.misfit(x_current) <= tau + FEASIBILITY_SLACK {
        return Ok(Projection::unchanged(x_current));
    }
    let radius = like.ball_radius(tau);
    let x0 = x_current.as_slice();
    let mut x = x0.to_vec();
    let mut x_bar = x_current.clone();
    let mut z = ComplexVector::zeros(like.op.output_dim());
    let (d1, d2, d3) = (pd.delta1, pd.delta2, pd.delta3);
    let mut converged = false;
    let mut iterations = 0;

    for i in 0..pd.max_iters {
        iterations = i + 1;
        let v = z.add_scaled(d1, &like.op.forward(&x_bar)?)?;
        let inner = v.scale(1.0 / d1)?;
        let projected = l2_ball_project(&inner, &like.y, radius)?;
        z = v.add_scaled(-d1, &projected)?;
        let back = like.op.adjoint(&z)?;
        let x_new: Vec<f64> = x
            .iter()
            .zip(x0)
            .zip(back.as_slice())
            .map(|((xi, x0i), bi)| (xi + d2 * x0i - d2 * bi) / (1.0 + d2))
            .collect();
        let change = linalg::distance(&x_new, &x);
        let scale = linalg::norm(&x_new).max(f64::MIN_POSITIVE);
        let extrapolated = x_new
            .iter()
            .zip(&x)
            .map(|(a, b)| a + d3 * (a - b))
            .collect();
        x_bar = x_current.with_data(extrapolated)?;
        x = x_new;
        if change <= pd.tol * scale {
            converged = true;
            break;
        }
    }

    let x = x_current.with_data(x)?;
    let residual = prox_residual(&x, tau, like)?;
    Ok(Projection {
        x,
        iterations,
        residual,
        converged,
    })
}

/// A likelihood that is constant in `x`, `L(x) = c`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantLikelihood {
    log_value: f64,
}

impl ConstantLikelihood {
    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "constant likelihood must be positive, got {value}"
            )));
        }
        Ok(Self {
            log_value: value.ln(),
        })
    }
}

impl ConvexLikelihood for ConstantLikelihood {
    fn misfit(&self, _x: &ImageVector) -> f64 {
        0.0
    }

    fn log_normaliser(&self) -> f64 {
        -self.log_value
    }

    fn project(&self, x: &ImageVector, _tau: f64) -> Result<Projection> {
        Ok(Projection::unchanged(x))
    }
}
