//! Synthetic truth images and noisy observations.

use proxnest::ops::MeasurementOperator;
use proxnest::{rng, ComplexVector, ImageVector, Shape};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CliError, CliResult};

/// Sum of `count` isotropic Gaussian blobs on a zero background.
pub fn blobs(shape: Shape, count: usize, seed: u64) -> CliResult<ImageVector> {
    let (rows, cols) = shape;
    let mut r = rng::seeded(seed);
    let scale = rows.min(cols) as f64;
    let mut data = vec![0.0; rows * cols];
    for _ in 0..count {
        let cr = r.random_range(0.2..0.8) * rows as f64;
        let cc = r.random_range(0.2..0.8) * cols as f64;
        let width = r.random_range(0.05..0.15) * scale;
        let amp = r.random_range(0.5..1.0);
        for (i, v) in data.iter_mut().enumerate() {
            let dr = (i / cols) as f64 - cr;
            let dc = (i % cols) as f64 - cc;
            *v += amp * (-(dr * dr + dc * dc) / (2.0 * width * width)).exp();
        }
    }
    Ok(ImageVector::new(data, shape)?)
}

/// Noise level giving `20·log₁₀(‖Φx‖ / (√d·σ)) = snr_db`, with `d` the real
/// degrees of freedom of the data.
pub fn noise_sigma(clean: &ComplexVector, dof: usize, snr_db: f64) -> f64 {
    clean.norm() / ((dof as f64).sqrt() * 10f64.powf(snr_db / 20.0))
}

/// `y = Φ·truth + n`, with `n` white Gaussian of standard deviation `σ` in
/// every real degree of freedom (circular for complex data). Returns `y`
/// and `σ`; with `add_noise` false, `y = Φ·truth` exactly.
pub fn simulate_observation<R: Rng + ?Sized>(
    truth: &ImageVector,
    op: &dyn MeasurementOperator,
    snr_db: f64,
    rng: &mut R,
    add_noise: bool,
) -> CliResult<(ComplexVector, f64)> {
    let clean = op.forward(truth)?;
    if clean.norm() == 0.0 {
        return Err(CliError::Config("truth image produces zero signal".into()));
    }
    let sigma = noise_sigma(&clean, op.data_dof(), snr_db);
    if !add_noise {
        return Ok((clean, sigma));
    }
    let mut draw = || sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
    let (mut re, mut im) = clean.into_parts();
    re.iter_mut().for_each(|v| *v += draw());
    if !op.real_output() {
        im.iter_mut().for_each(|v| *v += draw());
    }
    Ok((ComplexVector::new(re, im)?, sigma))
}

/// `20·log₁₀(‖truth‖ / ‖truth - estimate‖)`
pub fn reconstruction_snr(truth: &ImageVector, estimate: &ImageVector) -> f64 {
    20.0 * (truth.norm() / truth.distance(estimate)).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proxnest::ops::{make_mask, IdentityOperator, MaskedFourierOperator};

    #[test]
    fn noiseless_observation_is_exact() {
        let truth = blobs((8, 8), 3, 1).unwrap();
        let op = IdentityOperator::new((8, 8));
        let (y, _) = simulate_observation(&truth, &op, 15.0, &mut rng::seeded(0), false).unwrap();
        assert_eq!(y.re(), truth.as_slice());
    }

    #[test]
    fn realised_snr_matches_target() {
        let truth = blobs((16, 16), 4, 2).unwrap();
        let op = MaskedFourierOperator::new((16, 16), make_mask((16, 16), 0.5, 3).unwrap()).unwrap();
        let clean = op.forward(&truth).unwrap();
        let mut total = 0.0;
        for seed in 0..10 {
            let (y, _) = simulate_observation(&truth, &op, 15.0, &mut rng::seeded(seed), true).unwrap();
            let noise = y.sub(&clean).unwrap();
            total += 20.0 * (clean.norm() / noise.norm()).log10();
        }
        assert!((total / 10.0 - 15.0).abs() < 1.0);
    }

    #[test]
    fn fixed_seed_reproduces_data() {
        let truth = blobs((8, 8), 2, 5).unwrap();
        let op = IdentityOperator::new((8, 8));
        let a = simulate_observation(&truth, &op, 10.0, &mut rng::seeded(4), true).unwrap();
        let b = simulate_observation(&truth, &op, 10.0, &mut rng::seeded(4), true).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.to_bits(), b.1.to_bits());
    }

    #[test]
    fn zero_truth_rejected() {
        let op = IdentityOperator::new((2, 2));
        assert!(simulate_observation(&ImageVector::zeros((2, 2)), &op, 10.0, &mut rng::seeded(0), true).is_err());
    }
}
