//! Denoisers and the score they induce through Tweedie's identity.
//!
//! A denoiser `D_ε` trained at noise variance `ε` satisfies
//! `∇log p_ε(x) = (D_ε(x) - x) / ε`, where `p_ε` is the prior convolved with
//! `N(0, εI)`. The data-driven kernel only ever sees a prior through this
//! score.

mod external;

pub use external::{read_frame, write_frame, ExternalDenoiser, FRAME_MAGIC};

use crate::batch::{map_indexed, Execution};
use crate::error::{Error, Result};
use crate::model::ImageVector;

pub trait Denoiser: Send + Sync {
    /// Denoised image, same shape as `x`.
    fn apply(&self, x: &ImageVector) -> Result<ImageVector>;

    /// Noise variance the denoiser is calibrated for.
    fn epsilon(&self) -> f64;
}

/// `(D(x) - x) / ε`
pub fn tweedie_score(d: &dyn Denoiser, x: &ImageVector) -> Result<ImageVector> {
    let eps = d.epsilon();
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "denoiser noise level must be positive, got {eps}"
        )));
    }
    let dx = d.apply(x)?;
    x.with_data(
        dx.as_slice()
            .iter()
            .zip(x.as_slice())
            .map(|(a, b)| (a - b) / eps)
            .collect(),
    )
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "denoiser noise level must be positive, got {epsilon}"
        )));
    }
    Ok(())
}

/// Returns its input; `ε` only scales the (zero) score.
#[derive(Debug, Clone, Copy)]
pub struct IdentityDenoiser {
    epsilon: f64,
}

impl IdentityDenoiser {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self { epsilon })
    }
}

impl Denoiser for IdentityDenoiser {
    fn apply(&self, x: &ImageVector) -> Result<ImageVector> {
        Ok(x.clone())
    }

    fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Exact MMSE denoiser for the prior `N(m, s²I)`:
/// `D(x) = x - ε(x - m)/(s² + ε)`.
#[derive(Debug, Clone)]
pub struct AnalyticGaussianDenoiser {
    mean: ImageVector,
    variance: f64,
    epsilon: f64,
}

impl AnalyticGaussianDenoiser {
    pub fn new(mean: ImageVector, variance: f64, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "prior variance must be positive, got {variance}"
            )));
        }
        Ok(Self {
            mean,
            variance,
            epsilon,
        })
    }

    pub fn mean(&self) -> &ImageVector {
        &self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

impl Denoiser for AnalyticGaussianDenoiser {
    fn apply(&self, x: &ImageVector) -> Result<ImageVector> {
        x.check_shape(self.mean.shape())?;
        let shrink = self.epsilon / (self.variance + self.epsilon);
        x.with_data(
            x.as_slice()
                .iter()
                .zip(self.mean.as_slice())
                .map(|(v, m)| v - shrink * (v - m))
                .collect(),
        )
    }

    fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Periodic Gaussian blur with standard deviation `width` pixels, truncated
/// at four widths and renormalised. Linear, shift-invariant, and preserves
/// constant images.
#[derive(Debug, Clone)]
pub struct GaussianSmoothingDenoiser {
    width: f64,
    epsilon: f64,
    taps: Vec<f64>,
    execution: Execution,
}

impl GaussianSmoothingDenoiser {
    pub fn new(width: f64, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "smoothing width must be positive, got {width}"
            )));
        }
        let radius = (4.0 * width).ceil() as usize;
        let mut taps: Vec<f64> = (0..=2 * radius)
            .map(|i| {
                let d = i as f64 - radius as f64;
                (-0.5 * d * d / (width * width)).exp()
            })
            .collect();
        let total: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= total);
        Ok(Self {
            width,
            epsilon,
            taps,
            execution: Execution::default(),
        })
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Kernel taps, centred.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Blurs each length-`len` line starting at `offset(i)` with stride
    /// `stride`, for `count` lines.
    fn blur_lines(
        &self,
        data: &[f64],
        count: usize,
        len: usize,
        offset: impl Fn(usize) -> usize + Sync + Send,
        stride: usize,
    ) -> Vec<Vec<f64>> {
        let radius = (self.taps.len() / 2) as isize;
        let n = len as isize;
        map_indexed(count, self.execution, |line| {
            let base = offset(line);
            (0..len)
                .map(|k| {
                    self.taps
                        .iter()
                        .enumerate()
                        .map(|(t, w)| {
                            let j = (k as isize + t as isize - radius).rem_euclid(n) as usize;
                            w * data[base + j * stride]
                        })
                        .sum()
                })
                .collect()
        })
    }
}

impl Denoiser for GaussianSmoothingDenoiser {
    fn apply(&self, x: &ImageVector) -> Result<ImageVector> {
        let (rows, cols) = x.shape();
        let rowwise = self.blur_lines(x.as_slice(), rows, cols, |r| r * cols, 1);
        let flat: Vec<f64> = rowwise.into_iter().flatten().collect();
        let colwise = self.blur_lines(&flat, cols, rows, |c| c, cols);
        let mut out = vec![0.0; rows * cols];
        for (c, column) in colwise.into_iter().enumerate() {
            for (r, v) in column.into_iter().enumerate() {
                out[r * cols + c] = v;
            }
        }
        x.with_data(out)
    }

    fn epsilon(&self) -> f64 {
        self.epsilon
    }
}
