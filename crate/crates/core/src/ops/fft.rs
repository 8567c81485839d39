use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{check_len, MeasurementOperator};
use crate::error::{Error, Result};
use crate::model::{ComplexVector, ImageVector, Shape};

/// Planned unitary 2-D FFT for a fixed power-of-two shape.
#[derive(Clone)]
pub struct Fft2 {
    shape: Shape,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2").field("shape", &self.shape).finish()
    }
}

impl Fft2 {
    pub fn new(shape: Shape) -> Result<Self> {
        let (rows, cols) = shape;
        if !(rows.is_power_of_two() && cols.is_power_of_two()) {
            return Err(Error::NotPowerOfTwo { rows, cols });
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            shape,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
            scale: 1.0 / ((rows * cols) as f64).sqrt(),
        })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    fn transform(&self, buf: &mut [Complex64], row: &dyn Fft<f64>, col: &dyn Fft<f64>) {
        let (rows, cols) = self.shape;
        debug_assert_eq!(buf.len(), rows * cols);
        row.process(buf);
        if rows > 1 {
            let mut column = vec![Complex64::new(0.0, 0.0); rows];
            for j in 0..cols {
                for i in 0..rows {
                    column[i] = buf[i * cols + j];
                }
                col.process(&mut column);
                for i in 0..rows {
                    buf[i * cols + j] = column[i];
                }
            }
        }
        for v in buf.iter_mut() {
            *v *= self.scale;
        }
    }

    /// In-place unitary forward transform of a row-major buffer.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, self.row_fwd.as_ref(), self.col_fwd.as_ref());
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, self.row_inv.as_ref(), self.col_inv.as_ref());
    }

    pub fn forward(&self, x: &ImageVector) -> Result<ComplexVector> {
        x.check_shape(self.shape)?;
        let mut buf: Vec<Complex64> = x
            .as_slice()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.forward_in_place(&mut buf);
        ComplexVector::new(
            buf.iter().map(|c| c.re).collect(),
            buf.iter().map(|c| c.im).collect(),
        )
    }

    pub fn inverse(&self, y: &ComplexVector) -> Result<ComplexVector> {
        check_len(self.shape.0 * self.shape.1, y.len())?;
        let mut buf: Vec<Complex64> = y
            .re()
            .iter()
            .zip(y.im())
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        self.inverse_in_place(&mut buf);
        ComplexVector::new(
            buf.iter().map(|c| c.re).collect(),
            buf.iter().map(|c| c.im).collect(),
        )
    }
}

/// Unitary 2-D DFT of a real image, coefficients in row-major order.
pub fn fft2_forward(x: &ImageVector) -> Result<ComplexVector> {
    Fft2::new(x.shape())?.forward(x)
}

/// Inverse of [`fft2_forward`]; the result is complex in general.
pub fn fft2_inverse(y: &ComplexVector, shape: Shape) -> Result<ComplexVector> {
    Fft2::new(shape)?.inverse(y)
}

/// Unitary 2-D Fourier transform followed by coefficient selection.
#[derive(Debug, Clone)]
pub struct MaskedFourierOperator {
    fft: Fft2,
    mask: Vec<bool>,
    kept: Vec<usize>,
}

impl MaskedFourierOperator {
    pub fn new(shape: Shape, mask: Vec<bool>) -> Result<Self> {
        check_len(shape.0 * shape.1, mask.len())?;
        let kept: Vec<usize> = mask
            .iter()
            .enumerate()
            .filter_map(|(i, &keep)| keep.then_some(i))
            .collect();
        if kept.is_empty() {
            return Err(Error::InvalidArgument("mask keeps no coefficients".into()));
        }
        Ok(Self {
            fft: Fft2::new(shape)?,
            mask,
            kept,
        })
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn kept_fraction(&self) -> f64 {
        self.kept.len() as f64 / self.mask.len() as f64
    }
}

impl MeasurementOperator for MaskedFourierOperator {
    fn input_shape(&self) -> Shape {
        self.fft.shape()
    }

    fn output_dim(&self) -> usize {
        self.kept.len()
    }

    fn forward(&self, x: &ImageVector) -> Result<ComplexVector> {
        x.check_shape(self.fft.shape())?;
        let mut buf: Vec<Complex64> = x
            .as_slice()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.fft.forward_in_place(&mut buf);
        ComplexVector::new(
            self.kept.iter().map(|&k| buf[k].re).collect(),
            self.kept.iter().map(|&k| buf[k].im).collect(),
        )
    }

    fn adjoint(&self, y: &ComplexVector) -> Result<ImageVector> {
        check_len(self.kept.len(), y.len())?;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.mask.len()];
        for (idx, &k) in self.kept.iter().enumerate() {
            buf[k] = Complex64::new(y.re()[idx], y.im()[idx]);
        }
        self.fft.inverse_in_place(&mut buf);
        ImageVector::new(buf.iter().map(|c| c.re).collect(), self.fft.shape())
    }

    fn operator_norm_bound(&self) -> f64 {
        1.0
    }

    fn real_output(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_image(seed: u64, shape: Shape) -> ImageVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..shape.0 * shape.1)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        ImageVector::new(data, shape).unwrap()
    }

    #[test]
    fn constant_image_has_only_dc() {
        let c = 1.7;
        let x = ImageVector::filled((4, 4), c).unwrap();
        let spec = fft2_forward(&x).unwrap();
        assert!((spec.re()[0] - 4.0 * c).abs() < 1e-12);
        assert!(spec.im()[0].abs() < 1e-12);
        for k in 1..16 {
            assert!(spec.re()[k].abs() < 1e-12 && spec.im()[k].abs() < 1e-12);
        }
    }

    #[test]
    fn parseval_and_round_trip() {
        for (seed, shape) in [(1, (8, 8)), (2, (4, 16)), (3, (1, 32)), (4, (32, 32))] {
            let x = random_image(seed, shape);
            let spec = fft2_forward(&x).unwrap();
            assert!((spec.norm() - x.norm()).abs() < 1e-10);
            let back = fft2_inverse(&spec, shape).unwrap();
            for (a, b) in back.re().iter().zip(x.as_slice()) {
                assert!((a - b).abs() < 1e-10);
            }
            assert!(back.im().iter().all(|v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn non_power_of_two_rejected() {
        let x = ImageVector::zeros((3, 4));
        assert!(matches!(
            fft2_forward(&x),
            Err(Error::NotPowerOfTwo { rows: 3, cols: 4 })
        ));
    }

    #[test]
    fn full_mask_is_unitary() {
        let shape = (8, 4);
        let op = MaskedFourierOperator::new(shape, vec![true; 32]).unwrap();
        let x = random_image(9, shape);
        assert!((op.forward(&x).unwrap().norm() - x.norm()).abs() < 1e-10);
        let back = op.adjoint(&op.forward(&x).unwrap()).unwrap();
        assert!(back.distance(&x) < 1e-10);
    }
}
