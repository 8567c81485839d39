//! Orthogonal separable 2-D wavelet transforms with periodic boundaries.
//!
//! Coefficients use the usual Mallat layout: after each level the
//! approximation occupies the top-left block. Axes of length one are left
//! untransformed, so a `1 × n` image is handled as a 1-D signal.

use serde::{Deserialize, Serialize};

use super::{Dictionary, RealLinearMap};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ImageVector, Shape};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

const HAAR: [f64; 2] = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];

/// Daubechies low-pass filter with six vanishing moments (12 taps).
#[allow(clippy::excessive_precision)]
const DB6: [f64; 12] = [
    -0.001_077_301_085_308_479_6,
    0.004_777_257_510_945_510_6,
    0.000_553_842_201_161_496_14,
    -0.031_582_039_317_486_030,
    0.027_522_865_530_305_729,
    0.097_501_605_587_323_049,
    -0.129_766_867_567_261_94,
    -0.226_264_693_965_439_82,
    0.315_250_351_709_197_63,
    0.751_133_908_021_095_35,
    0.494_623_890_398_453_09,
    0.111_540_743_350_109_46,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveletFamily {
    Haar,
    Daubechies6,
}

impl WaveletFamily {
    fn low_pass(self) -> &'static [f64] {
        match self {
            WaveletFamily::Haar => &HAAR,
            WaveletFamily::Daubechies6 => &DB6,
        }
    }
}

/// A square orthogonal wavelet dictionary `Ψ` for one image shape.
#[derive(Debug, Clone)]
pub struct WaveletDictionary {
    family: WaveletFamily,
    levels: usize,
    shape: Shape,
    low: Vec<f64>,
    high: Vec<f64>,
}

impl WaveletDictionary {
    pub fn new(family: WaveletFamily, levels: usize, shape: Shape) -> Result<Self> {
        let (rows, cols) = shape;
        if levels == 0 {
            return Err(Error::InvalidArgument("wavelet levels must be ≥ 1".into()));
        }
        let divisible = |len: usize| {
            len == 1 || (levels < usize::BITS as usize && len.is_multiple_of(1usize << levels))
        };
        if rows * cols == 0 || !divisible(rows) || !divisible(cols) || rows * cols == 1 {
            return Err(Error::IncompatibleWaveletShape { rows, cols, levels });
        }
        let low = family.low_pass().to_vec();
        let taps = low.len();
        let high = (0..taps)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * low[taps - 1 - j]
            })
            .collect();
        let dict = Self {
            family,
            levels,
            shape,
            low,
            high,
        };
        dict.check_orthogonal()?;
        Ok(dict)
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Round-trips a deterministic probe vector; rejects the dictionary when
    /// `Ψ Ψ† x` differs from `x`.
    fn check_orthogonal(&self) -> Result<()> {
        let n = self.shape.0 * self.shape.1;
        let probe: Vec<f64> = (0..n)
            .map(|i| ((i as f64 + 0.5) * 0.618_033_988_749_895).fract() - 0.5)
            .collect();
        let mut coeffs = probe.clone();
        self.analyse_in_place(&mut coeffs);
        let mut back = coeffs;
        self.synthesise_in_place(&mut back);
        let err = linalg::distance(&back, &probe) / linalg::norm(&probe);
        if !(err < 1e-10) {
            return Err(Error::NonOrthogonal(err));
        }
        Ok(())
    }

    /// Block sizes `(rows, cols)` transformed at each level, finest first.
    fn level_blocks(&self) -> Vec<Shape> {
        let (mut r, mut c) = self.shape;
        let mut blocks = Vec::with_capacity(self.levels);
        for _ in 0..self.levels {
            blocks.push((r, c));
            if r > 1 {
                r /= 2;
            }
            if c > 1 {
                c /= 2;
            }
        }
        blocks
    }

    fn analyse_1d(&self, signal: &[f64], out: &mut [f64]) {
        let n = signal.len();
        let half = n / 2;
        for k in 0..half {
            let mut a = 0.0;
            let mut d = 0.0;
            for (j, (&h, &g)) in self.low.iter().zip(&self.high).enumerate() {
                let v = signal[(2 * k + j) % n];
                a += h * v;
                d += g * v;
            }
            out[k] = a;
            out[half + k] = d;
        }
    }

    fn synthesise_1d(&self, coeffs: &[f64], out: &mut [f64]) {
        let n = coeffs.len();
        let half = n / 2;
        out.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..half {
            let (a, d) = (coeffs[k], coeffs[half + k]);
            for (j, (&h, &g)) in self.low.iter().zip(&self.high).enumerate() {
                out[(2 * k + j) % n] += h * a + g * d;
            }
        }
    }

    fn analyse_in_place(&self, data: &mut [f64]) {
        let cols = self.shape.1;
        let mut line = Vec::new();
        let mut out = Vec::new();
        for (r, c) in self.level_blocks() {
            if c > 1 {
                line.resize(c, 0.0);
                out.resize(c, 0.0);
                for i in 0..r {
                    line.copy_from_slice(&data[i * cols..i * cols + c]);
                    self.analyse_1d(&line, &mut out);
                    data[i * cols..i * cols + c].copy_from_slice(&out);
                }
            }
            if r > 1 {
                line.resize(r, 0.0);
                out.resize(r, 0.0);
                for j in 0..c {
                    for i in 0..r {
                        line[i] = data[i * cols + j];
                    }
                    self.analyse_1d(&line, &mut out);
                    for i in 0..r {
                        data[i * cols + j] = out[i];
                    }
                }
            }
        }
    }

    fn synthesise_in_place(&self, data: &mut [f64]) {
        let cols = self.shape.1;
        let mut line = Vec::new();
        let mut out = Vec::new();
        for (r, c) in self.level_blocks().into_iter().rev() {
            if r > 1 {
                line.resize(r, 0.0);
                out.resize(r, 0.0);
                for j in 0..c {
                    for i in 0..r {
                        line[i] = data[i * cols + j];
                    }
                    self.synthesise_1d(&line, &mut out);
                    for i in 0..r {
                        data[i * cols + j] = out[i];
                    }
                }
            }
            if c > 1 {
                line.resize(c, 0.0);
                out.resize(c, 0.0);
                for i in 0..r {
                    line.copy_from_slice(&data[i * cols..i * cols + c]);
                    self.synthesise_1d(&line, &mut out);
                    data[i * cols..i * cols + c].copy_from_slice(&out);
                }
            }
        }
    }

    /// `Ψ† x`
    pub fn analysis(&self, x: &ImageVector) -> Result<Vec<f64>> {
        x.check_shape(self.shape)?;
        let mut data = x.as_slice().to_vec();
        self.analyse_in_place(&mut data);
        Ok(data)
    }

    /// `Ψ c`
    pub fn synthesis(&self, coeffs: &[f64]) -> Result<ImageVector> {
        let n = self.shape.0 * self.shape.1;
        if coeffs.len() != n {
            return Err(Error::shape(n, coeffs.len()));
        }
        let mut data = coeffs.to_vec();
        self.synthesise_in_place(&mut data);
        ImageVector::new(data, self.shape)
    }
}

pub fn wavelet_analysis(dict: &WaveletDictionary, x: &ImageVector) -> Result<Vec<f64>> {
    dict.analysis(x)
}

pub fn wavelet_synthesis(dict: &WaveletDictionary, coeffs: &[f64]) -> Result<ImageVector> {
    dict.synthesis(coeffs)
}

impl Dictionary for WaveletDictionary {
    fn shape(&self) -> Shape {
        self.shape
    }

    fn analysis(&self, x: &ImageVector) -> Result<Vec<f64>> {
        WaveletDictionary::analysis(self, x)
    }

    fn synthesis(&self, coeffs: &[f64]) -> Result<ImageVector> {
        WaveletDictionary::synthesis(self, coeffs)
    }
}

/// Synthesis as a linear map from coefficient images to images.
impl RealLinearMap for WaveletDictionary {
    fn input_shape(&self) -> Shape {
        self.shape
    }

    fn output_shape(&self) -> Shape {
        self.shape
    }

    fn apply(&self, x: &ImageVector) -> Result<ImageVector> {
        self.synthesis(x.as_slice())
    }

    fn apply_adjoint(&self, y: &ImageVector) -> Result<ImageVector> {
        ImageVector::new(self.analysis(y)?, self.shape)
    }

    fn norm_bound(&self) -> f64 {
        1.0
    }
}
