use std::sync::Arc;

use super::{l1_wavelet_prox, soft_scalar};
use crate::error::{Error, Result};
use crate::model::{ImageVector, Potential};
use crate::ops::Dictionary;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "prox parameter must be positive, got {lambda}"
        )));
    }
    Ok(())
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `f = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPotential;

impl Potential for ZeroPotential {
    fn eval(&self, _x: &ImageVector) -> f64 {
        0.0
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn gradient(&self, x: &ImageVector) -> Result<ImageVector> {
        Ok(ImageVector::zeros(x.shape()))
    }

    fn has_prox(&self) -> bool {
        true
    }

    fn prox(&self, x: &ImageVector, lambda: f64) -> Result<ImageVector> {
        check_lambda(lambda)?;
        Ok(x.clone())
    }
}

/// Isotropic Gaussian potential `‖x - m‖² / (2 s²)`.
#[derive(Debug, Clone)]
pub struct QuadraticPotential {
    mean: ImageVector,
    variance: f64,
}

impl QuadraticPotential {
    pub fn new(mean: ImageVector, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "variance must be positive, got {variance}"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> &ImageVector {
        &self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// `log` of the Gaussian normalising constant, `n/2 · log(2π s²)`.
    pub fn log_normaliser(&self) -> f64 {
        0.5 * self.mean.len() as f64 * (2.0 * std::f64::consts::PI * self.variance).ln()
    }
}

impl Potential for QuadraticPotential {
    fn eval(&self, x: &ImageVector) -> f64 {
        let d = x.distance(&self.mean);
        d * d / (2.0 * self.variance)
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn gradient(&self, x: &ImageVector) -> Result<ImageVector> {
        x.check_shape(self.mean.shape())?;
        let inv = 1.0 / self.variance;
        x.with_data(
            x.as_slice()
                .iter()
                .zip(self.mean.as_slice())
                .map(|(a, m)| (a - m) * inv)
                .collect(),
        )
    }

    fn has_prox(&self) -> bool {
        true
    }

    fn prox(&self, x: &ImageVector, lambda: f64) -> Result<ImageVector> {
        check_lambda(lambda)?;
        x.check_shape(self.mean.shape())?;
        let s2 = self.variance;
        let denom = lambda + s2;
        x.with_data(
            x.as_slice()
                .iter()
                .zip(self.mean.as_slice())
                .map(|(a, m)| (lambda * m + s2 * a) / denom)
                .collect(),
        )
    }
}

/// `μ ‖x‖₁`.
#[derive(Debug, Clone, Copy)]
pub struct L1Potential {
    mu: f64,
}

impl L1Potential {
    pub fn new(mu: f64) -> Self {
        Self { mu }
    }
}

impl Potential for L1Potential {
    fn eval(&self, x: &ImageVector) -> f64 {
        self.mu * x.as_slice().iter().map(|v| v.abs()).sum::<f64>()
    }

    fn has_prox(&self) -> bool {
        true
    }

    fn prox(&self, x: &ImageVector, lambda: f64) -> Result<ImageVector> {
        check_lambda(lambda)?;
        let t = lambda * self.mu;
        x.with_data(x.as_slice().iter().map(|&v| soft_scalar(v, t)).collect())
    }

    fn subgradient(&self, x: &ImageVector) -> Result<ImageVector> {
        x.with_data(x.as_slice().iter().map(|&v| self.mu * sign(v)).collect())
    }
}

/// Sparsity-promoting prior `μ ‖Ψ† x‖₁` for an orthogonal dictionary `Ψ`.
#[derive(Clone)]
pub struct WaveletL1Prior {
    mu: f64,
    dict: Arc<dyn Dictionary>,
}

impl WaveletL1Prior {
    pub fn new(mu: f64, dict: Arc<dyn Dictionary>) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sparsity scale must be non-negative, got {mu}"
            )));
        }
        Ok(Self { mu, dict })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn dictionary(&self) -> &Arc<dyn Dictionary> {
        &self.dict
    }

    /// `-log` of the normalising constant of `exp(-μ‖Ψ†x‖₁)`, i.e.
    /// `-n log(μ/2)`. Infinite when `μ = 0`.
    pub fn log_normaliser(&self) -> f64 {
        let (r, c) = self.dict.shape();
        -((r * c) as f64) * (self.mu / 2.0).ln()
    }
}

impl std::fmt::Debug for WaveletL1Prior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WaveletL1Prior")
            .field("mu", &self.mu)
            .finish_non_exhaustive()
    }
}

impl Potential for WaveletL1Prior {
    fn eval(&self, x: &ImageVector) -> f64 {
        match self.dict.analysis(x) {
            Ok(c) => self.mu * c.iter().map(|v| v.abs()).sum::<f64>(),
            Err(_) => f64::NAN,
        }
    }

    fn has_prox(&self) -> bool {
        true
    }

    fn prox(&self, x: &ImageVector, lambda: f64) -> Result<ImageVector> {
        l1_wavelet_prox(x, self.mu, lambda, self.dict.as_ref())
    }

    fn subgradient(&self, x: &ImageVector) -> Result<ImageVector> {
        let coeffs = self.dict.analysis(x)?;
        let signs: Vec<f64> = coeffs.iter().map(|&c| self.mu * sign(c)).collect();
        self.dict.synthesis(&signs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::ops::{WaveletDictionary, WaveletFamily};

    #[test]
    fn quadratic_prox_closed_form() {
        let q = QuadraticPotential::new(ImageVector::zeros((1, 1)), 1.0).unwrap();
        let p = q.prox(&ImageVector::from_vec(vec![2.0]).unwrap(), 1.0).unwrap();
        assert!((p.as_slice()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wavelet_prior_subgradient_is_a_subgradient() {
        let dict: Arc<dyn Dictionary> =
            Arc::new(WaveletDictionary::new(WaveletFamily::Haar, 2, (1, 8)).unwrap());
        let prior = WaveletL1Prior::new(0.7, dict).unwrap();
        let x = ImageVector::from_vec(vec![1.0, -2.0, 0.5, 0.0, 3.0, -1.0, 2.0, 0.25]).unwrap();
        let s = prior.subgradient(&x).unwrap();
        for k in 0..8 {
            let mut z = x.as_slice().to_vec();
            z[k] += 0.3 * (k as f64 - 3.5);
            let z = x.with_data(z).unwrap();
            let diff = linalg::sub(z.as_slice(), x.as_slice());
            assert!(prior.eval(&z) >= prior.eval(&x) + linalg::dot(s.as_slice(), &diff) - 1e-12);
        }
    }

    #[test]
    fn negative_parameters_rejected() {
        assert!(QuadraticPotential::new(ImageVector::zeros((1, 1)), 0.0).is_err());
        assert!(ZeroPotential.prox(&ImageVector::zeros((1, 1)), 0.0).is_err());
        let dict: Arc<dyn Dictionary> =
            Arc::new(WaveletDictionary::new(WaveletFamily::Haar, 1, (1, 2)).unwrap());
        assert!(WaveletL1Prior::new(-1.0, dict).is_err());
    }
}
