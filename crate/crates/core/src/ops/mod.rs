//! Linear measurement operators and the wavelet dictionary.

mod fft;
mod mask;
mod wavelet;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ComplexVector, ImageVector, Shape};

pub use fft::{fft2_forward, fft2_inverse, Fft2, MaskedFourierOperator};
pub use mask::make_mask;
pub use wavelet::{wavelet_analysis, wavelet_synthesis, WaveletDictionary, WaveletFamily};

/// A linear map `Φ` from real images to complex data.
///
/// Adjoints are taken with respect to `Re <a, b>` on the data side, so for a
/// real image `x`, `<Φx, y> = <x, Φ†y>`.
pub trait MeasurementOperator: Send + Sync {
    fn input_shape(&self) -> Shape;

    fn input_dim(&self) -> usize {
        let (r, c) = self.input_shape();
        r * c
    }

    fn output_dim(&self) -> usize;

    fn forward(&self, x: &ImageVector) -> Result<ComplexVector>;

    fn adjoint(&self, y: &ComplexVector) -> Result<ImageVector>;

    /// An upper bound on `‖Φ‖`.
    fn operator_norm_bound(&self) -> f64;

    /// True when every output has a zero imaginary part.
    fn real_output(&self) -> bool;

    /// True when `ΦΦ† = I` on the data space, which admits a closed-form
    /// projection onto likelihood balls.
    fn has_orthonormal_rows(&self) -> bool {
        false
    }

    /// Number of real degrees of freedom in the data.
    fn data_dof(&self) -> usize {
        if self.real_output() {
            self.output_dim()
        } else {
            2 * self.output_dim()
        }
    }
}

/// A real linear map between images, used to compose a dictionary with a
/// measurement operator.
pub trait RealLinearMap: Send + Sync {
    fn input_shape(&self) -> Shape;
    fn output_shape(&self) -> Shape;
    fn apply(&self, x: &ImageVector) -> Result<ImageVector>;
    fn apply_adjoint(&self, y: &ImageVector) -> Result<ImageVector>;
    fn norm_bound(&self) -> f64;
}

/// A square orthogonal dictionary `Ψ` (so `Ψ†Ψ = ΨΨ† = I`).
pub trait Dictionary: Send + Sync {
    fn shape(&self) -> Shape;
    /// `Ψ† x`
    fn analysis(&self, x: &ImageVector) -> Result<Vec<f64>>;
    /// `Ψ c`
    fn synthesis(&self, coeffs: &[f64]) -> Result<ImageVector>;
}

/// `Ψ = I`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityDictionary {
    shape: Shape,
}

impl IdentityDictionary {
    pub fn new(shape: Shape) -> Self {
        Self { shape }
    }
}

impl Dictionary for IdentityDictionary {
    fn shape(&self) -> Shape {
        self.shape
    }

    fn analysis(&self, x: &ImageVector) -> Result<Vec<f64>> {
        x.check_shape(self.shape)?;
        Ok(x.as_slice().to_vec())
    }

    fn synthesis(&self, coeffs: &[f64]) -> Result<ImageVector> {
        ImageVector::new(coeffs.to_vec(), self.shape)
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::shape(expected, found));
    }
    Ok(())
}

/// `Φ = I`, with real-valued output.
#[derive(Debug, Clone)]
pub struct IdentityOperator {
    shape: Shape,
}

impl IdentityOperator {
    pub fn new(shape: Shape) -> Self {
        Self { shape }
    }
}

impl MeasurementOperator for IdentityOperator {
    fn input_shape(&self) -> Shape {
        self.shape
    }

    fn output_dim(&self) -> usize {
        self.input_dim()
    }

    fn forward(&self, x: &ImageVector) -> Result<ComplexVector> {
        x.check_shape(self.shape)?;
        ComplexVector::from_real(x.as_slice().to_vec())
    }

    fn adjoint(&self, y: &ComplexVector) -> Result<ImageVector> {
        check_len(self.output_dim(), y.len())?;
        ImageVector::new(y.re().to_vec(), self.shape)
    }

    fn operator_norm_bound(&self) -> f64 {
        1.0
    }

    fn real_output(&self) -> bool {
        true
    }

    fn has_orthonormal_rows(&self) -> bool {
        true
    }
}

/// Keeps a subset of pixels (a masked identity).
#[derive(Debug, Clone)]
pub struct SubsamplingOperator {
    shape: Shape,
    indices: Vec<usize>,
}

impl SubsamplingOperator {
    pub fn new(shape: Shape, mask: &[bool]) -> Result<Self> {
        check_len(shape.0 * shape.1, mask.len())?;
        let indices: Vec<usize> = mask
            .iter()
            .enumerate()
            .filter_map(|(i, &keep)| keep.then_some(i))
            .collect();
        if indices.is_empty() {
            return Err(Error::InvalidArgument("mask keeps no entries".into()));
        }
        Ok(Self { shape, indices })
    }
}

impl MeasurementOperator for SubsamplingOperator {
    fn input_shape(&self) -> Shape {
        self.shape
    }

    fn output_dim(&self) -> usize {
        self.indices.len()
    }

    fn forward(&self, x: &ImageVector) -> Result<ComplexVector> {
        x.check_shape(self.shape)?;
        let xs = x.as_slice();
        ComplexVector::from_real(self.indices.iter().map(|&i| xs[i]).collect())
    }

    fn adjoint(&self, y: &ComplexVector) -> Result<ImageVector> {
        check_len(self.output_dim(), y.len())?;
        let mut out = vec![0.0; self.input_dim()];
        for (&i, &v) in self.indices.iter().zip(y.re()) {
            out[i] = v;
        }
        ImageVector::new(out, self.shape)
    }

    fn operator_norm_bound(&self) -> f64 {
        1.0
    }

    fn real_output(&self) -> bool {
        true
    }

    fn has_orthonormal_rows(&self) -> bool {
        true
    }
}

/// A dense real matrix acting on flattened images.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    shape: Shape,
    rows: usize,
    /// Row-major `rows × n` entries.
    matrix: Vec<f64>,
    norm_bound: f64,
}

impl DenseOperator {
    pub fn new(rows: usize, shape: Shape, matrix: Vec<f64>) -> Result<Self> {
        let n = shape.0 * shape.1;
        check_len(rows * n, matrix.len())?;
        if let Some(index) = matrix.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let mut op = Self {
            shape,
            rows,
            matrix,
            norm_bound: f64::INFINITY,
        };
        let frobenius = linalg::norm(&op.matrix);
        let estimate = estimate_operator_norm(&op, 500, 0x5eed)?;
        op.norm_bound = frobenius.min(estimate * (1.0 + 1e-3));
        Ok(op)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.input_dim();
        &self.matrix[i * n..(i + 1) * n]
    }
}

impl MeasurementOperator for DenseOperator {
    fn input_shape(&self) -> Shape {
        self.shape
    }

    fn output_dim(&self) -> usize {
        self.rows
    }

    fn forward(&self, x: &ImageVector) -> Result<ComplexVector> {
        x.check_shape(self.shape)?;
        let out = (0..self.rows)
            .map(|i| linalg::dot(self.row(i), x.as_slice()))
            .collect();
        ComplexVector::from_real(out)
    }

    fn adjoint(&self, y: &ComplexVector) -> Result<ImageVector> {
        check_len(self.rows, y.len())?;
        let mut out = vec![0.0; self.input_dim()];
        for (i, &v) in y.re().iter().enumerate() {
            linalg::axpy(v, self.row(i), &mut out);
        }
        ImageVector::new(out, self.shape)
    }

    fn operator_norm_bound(&self) -> f64 {
        self.norm_bound
    }

    fn real_output(&self) -> bool {
        true
    }
}

/// `Φ ∘ A` for a measurement operator `Φ` and a real linear map `A`.
#[derive(Clone)]
pub struct ComposedOperator {
    outer: Arc<dyn MeasurementOperator>,
    inner: Arc<dyn RealLinearMap>,
}

impl ComposedOperator {
    pub fn new(outer: Arc<dyn MeasurementOperator>, inner: Arc<dyn RealLinearMap>) -> Result<Self> {
        if outer.input_shape() != inner.output_shape() {
            let (a, b) = (outer.input_shape(), inner.output_shape());
            return Err(Error::shape(
                format!("{}x{}", a.0, a.1),
                format!("{}x{}", b.0, b.1),
            ));
        }
        Ok(Self { outer, inner })
    }
}

impl MeasurementOperator for ComposedOperator {
    fn input_shape(&self) -> Shape {
        self.inner.input_shape()
    }

    fn output_dim(&self) -> usize {
        self.outer.output_dim()
    }

    fn forward(&self, x: &ImageVector) -> Result<ComplexVector> {
        self.outer.forward(&self.inner.apply(x)?)
    }

    fn adjoint(&self, y: &ComplexVector) -> Result<ImageVector> {
        self.inner.apply_adjoint(&self.outer.adjoint(y)?)
    }

    fn operator_norm_bound(&self) -> f64 {
        self.outer.operator_norm_bound() * self.inner.norm_bound()
    }

    fn real_output(&self) -> bool {
        self.outer.real_output()
    }
}

/// Power-iteration estimate of `‖Φ‖` from `iters` applications of `Φ†Φ`.
pub fn estimate_operator_norm(
    op: &dyn MeasurementOperator,
    iters: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = op.input_shape();
    let mut v: Vec<f64> = (0..op.input_dim())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let n0 = linalg::norm(&v);
    v.iter_mut().for_each(|e| *e /= n0);
    let mut estimate = 0.0;
    for _ in 0..iters.max(1) {
        let x = ImageVector::new(v, shape)?;
        let w = op.adjoint(&op.forward(&x)?)?.into_vec();
        let norm = linalg::norm(&w);
        if norm == 0.0 {
            return Ok(0.0);
        }
        estimate = norm.sqrt();
        v = w.into_iter().map(|e| e / norm).collect();
    }
    Ok(estimate)
}
