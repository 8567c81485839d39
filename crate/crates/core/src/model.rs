//! Domain types shared across the crate: images, data vectors, potentials,
//! likelihood constraints and run configuration.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Image shape as `(rows, cols)`.
pub type Shape = (usize, usize);

/// A real image stored flat in row-major order. Entries are always finite.
#[derive(Clone, PartialEq)]
pub struct ImageVector {
    data: Vec<f64>,
    shape: Shape,
}

impl ImageVector {
    pub fn new(data: Vec<f64>, shape: Shape) -> Result<Self> {
        if data.len() != shape.0 * shape.1 {
            return Err(Error::shape(
                format!("{}x{} = {} entries", shape.0, shape.1, shape.0 * shape.1),
                data.len(),
            ));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { data, shape })
    }

    /// A single-row image, convenient for vector-valued problems.
    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::new(data, (1, n))
    }

    pub fn zeros(shape: Shape) -> Self {
        Self {
            data: vec![0.0; shape.0 * shape.1],
            shape,
        }
    }

    pub fn filled(shape: Shape, value: f64) -> Result<Self> {
        Self::new(vec![value; shape.0 * shape.1], shape)
    }

    /// Builds an image with the same shape as `self` from new data.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::new(data, self.shape)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn rows(&self) -> usize {
        self.shape.0
    }

    pub fn cols(&self) -> usize {
        self.shape.1
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.data)
    }

    pub fn dot(&self, other: &ImageVector) -> f64 {
        linalg::dot(&self.data, &other.data)
    }

    pub fn distance(&self, other: &ImageVector) -> f64 {
        linalg::distance(&self.data, &other.data)
    }

    pub(crate) fn check_shape(&self, shape: Shape) -> Result<()> {
        if self.shape != shape {
            return Err(Error::shape(
                format!("{}x{}", shape.0, shape.1),
                format!("{}x{}", self.shape.0, self.shape.1),
            ));
        }
        Ok(())
    }
}

impl fmt::Debug for ImageVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ImageVector({}x{}, ", self.shape.0, self.shape.1)?;
        if self.data.len() <= 8 {
            write!(f, "{:?})", self.data)
        } else {
            write!(f, "{:?}...)", &self.data[..8])
        }
    }
}

/// A complex data vector held as separate real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexVector {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::shape(re.len(), im.len()));
        }
        if let Some(index) = re.iter().chain(im.iter()).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: index % re.len().max(1),
            });
        }
        Ok(Self { re, im })
    }

    pub fn from_real(re: Vec<f64>) -> Result<Self> {
        let im = vec![0.0; re.len()];
        Self::new(re, im)
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            re: vec![0.0; len],
            im: vec![0.0; len],
        }
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.re, self.im)
    }

    /// Real part of the Hermitian inner product, `Re Σ a_i conj(b_i)`.
    pub fn real_dot(&self, other: &ComplexVector) -> f64 {
        linalg::dot(&self.re, &other.re) + linalg::dot(&self.im, &other.im)
    }

    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.re) + linalg::norm_sqr(&self.im)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `self - other`, elementwise.
    pub fn sub(&self, other: &ComplexVector) -> Result<ComplexVector> {
        if self.len() != other.len() {
            return Err(Error::shape(self.len(), other.len()));
        }
        Ok(ComplexVector {
            re: linalg::sub(&self.re, &other.re),
            im: linalg::sub(&self.im, &other.im),
        })
    }

    /// `self + scale * other`, elementwise.
    pub fn add_scaled(&self, scale: f64, other: &ComplexVector) -> Result<ComplexVector> {
        if self.len() != other.len() {
            return Err(Error::shape(self.len(), other.len()));
        }
        let re = self.re.iter().zip(&other.re).map(|(a, b)| a + scale * b);
        let im = self.im.iter().zip(&other.im).map(|(a, b)| a + scale * b);
        ComplexVector::new(re.collect(), im.collect())
    }

    pub fn scale(&self, factor: f64) -> Result<ComplexVector> {
        ComplexVector::new(
            self.re.iter().map(|v| v * factor).collect(),
            self.im.iter().map(|v| v * factor).collect(),
        )
    }
}

/// A negative log-density `f(x)`, known up to an additive constant.
///
/// Capabilities are optional. `gradient` is the gradient of the potential
/// (so the score of the density is its negation). `prox` is the proximity
/// operator `argmin_u f(u) + |u - x|^2 / (2 lambda)`.
pub trait Potential: Send + Sync {
    fn eval(&self, x: &ImageVector) -> f64;

    fn has_gradient(&self) -> bool {
        false
    }

    fn gradient(&self, _x: &ImageVector) -> Result<ImageVector> {
        Err(Error::Unsupported("gradient"))
    }

    fn has_prox(&self) -> bool {
        false
    }

    fn prox(&self, _x: &ImageVector, _lambda: f64) -> Result<ImageVector> {
        Err(Error::Unsupported("prox"))
    }

    /// Any element of the subdifferential at `x`. Smooth potentials return
    /// their gradient.
    fn subgradient(&self, x: &ImageVector) -> Result<ImageVector> {
        self.gradient(x)
    }
}

/// Result of projecting onto a likelihood ball.
#[derive(Debug, Clone)]
pub struct Projection {
    pub x: ImageVector,
    pub iterations: usize,
    /// Relative feasibility violation of `x`; zero when exactly feasible.
    pub residual: f64,
    pub converged: bool,
}

impl Projection {
    pub(crate) fn unchanged(x: &ImageVector) -> Self {
        Self {
            x: x.clone(),
            iterations: 0,
            residual: 0.0,
            converged: true,
        }
    }
}

/// A log-convex likelihood `L(x) = exp(-misfit(x) - log_normaliser)`.
///
/// Thresholds are expressed on the misfit, i.e. the likelihood with its
/// normalising constant removed.
pub trait ConvexLikelihood: Send + Sync {
    fn misfit(&self, x: &ImageVector) -> f64;

    /// `-log L(x) - misfit(x)`; constant in `x`.
    fn log_normaliser(&self) -> f64;

    fn log_likelihood(&self, x: &ImageVector) -> f64 {
        -(self.misfit(x) + self.log_normaliser())
    }

    /// Euclidean projection onto `{x : misfit(x) <= tau}`. Feasible points are
    /// returned unchanged.
    fn project(&self, x: &ImageVector, tau: f64) -> Result<Projection>;
}

/// The convex set `{x : misfit(x) < tau}`.
#[derive(Clone)]
pub struct LikelihoodConstraint {
    likelihood: Arc<dyn ConvexLikelihood>,
    tau: f64,
}

impl LikelihoodConstraint {
    pub fn new(likelihood: Arc<dyn ConvexLikelihood>, tau: f64) -> Self {
        Self { likelihood, tau }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn likelihood(&self) -> &Arc<dyn ConvexLikelihood> {
        &self.likelihood
    }

    pub fn contains(&self, x: &ImageVector) -> bool {
        self.likelihood.misfit(x) < self.tau
    }

    pub fn project(&self, x: &ImageVector) -> Result<Projection> {
        if self.contains(x) {
            return Ok(Projection::unchanged(x));
        }
        self.likelihood.project(x, self.tau)
    }
}

impl fmt::Debug for LikelihoodConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LikelihoodConstraint")
            .field("tau", &self.tau)
            .finish_non_exhaustive()
    }
}

/// Sampler and nested-sampling parameters for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Langevin step size.
    pub delta: f64,
    /// Moreau-Yosida regularisation parameter.
    pub lambda_my: f64,
    /// Sparsity scale of the wavelet prior.
    #[serde(default)]
    pub mu: f64,
    /// Noise standard deviation.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Noise level the denoiser was trained at.
    #[serde(default)]
    pub epsilon: f64,
    /// Weight of the data-driven prior drift.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub n_live: usize,
    pub n_dead: usize,
    pub thinning: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_sigma() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    1.0
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            delta: 1e-7,
            lambda_my: 5e-7,
            mu: 5e4,
            sigma: 1.0,
            epsilon: 8.34,
            alpha: 3.5e-7,
            n_live: 100,
            n_dead: 2500,
            thinning: 20,
            burn_in: 100,
            rng_seed: 0,
        }
    }
}

/// Checks the [`RunConfig`] invariants, reporting the first violation.
pub fn validate_config(cfg: &RunConfig) -> Result<()> {
    let positive = [
        ("delta", cfg.delta),
        ("lambda_my", cfg.lambda_my),
        ("sigma", cfg.sigma),
    ];
    for (field, value) in positive {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::config(field, format!("{field} must be positive")));
        }
    }
    for (field, value) in [("mu", cfg.mu), ("epsilon", cfg.epsilon), ("alpha", cfg.alpha)] {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::config(
                field,
                format!("{field} must be finite and non-negative"),
            ));
        }
    }
    if cfg.n_live < 2 {
        return Err(Error::config("n_live", "n_live must be ≥ 2"));
    }
    if cfg.thinning < 1 {
        return Err(Error::config("thinning", "thinning must be ≥ 1"));
    }
    Ok(())
}
