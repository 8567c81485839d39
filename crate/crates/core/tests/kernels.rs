//! Long-run statistical behaviour of the Langevin kernels.

use std::sync::Arc;

use proxnest::denoiser::AnalyticGaussianDenoiser;
use proxnest::kernels::{sample_prior, transition, KernelSpec, KernelVariant};
use proxnest::likelihood::GaussianLikelihood;
use proxnest::ops::IdentityOperator;
use proxnest::prox::QuadraticPotential;
use proxnest::{rng, ComplexVector, ImageVector, LikelihoodConstraint, RunConfig};
use statrs::distribution::{ContinuousCDF, Normal};

fn cfg(delta: f64) -> RunConfig {
    RunConfig {
        delta,
        lambda_my: delta,
        epsilon: 0.0,
        alpha: 1.0,
        burn_in: 0,
        thinning: 1,
        ..RunConfig::default()
    }
}

fn loose_ball(n: usize) -> LikelihoodConstraint {
    let like = GaussianLikelihood::new(
        ComplexVector::from_real(vec![0.0; n]).unwrap(),
        Arc::new(IdentityOperator::new((1, n))),
        1.0,
    )
    .unwrap();
    LikelihoodConstraint::new(Arc::new(like), 1e6)
}

fn gaussian(n: usize, var: f64) -> Arc<QuadraticPotential> {
    Arc::new(QuadraticPotential::new(ImageVector::zeros((1, n)), var).unwrap())
}

/// Standard error of the mean from `batches` batch means.
fn batch_se(xs: &[f64], batches: usize) -> f64 {
    let size = xs.len() / batches;
    let means: Vec<f64> = xs.chunks(size).take(batches).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

#[test]
fn unadjusted_chain_has_prior_moments() {
    let var = 0.01;
    let spec = KernelSpec::new(KernelVariant::LangevinSmoothPrior, cfg(1e-3), (1, 2))
        .with_prior(gaussian(2, var))
        .with_constraint(loose_ball(2));
    let mut r = rng::seeded(17);
    let mut x = ImageVector::zeros((1, 2));
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for _ in 0..100_000 {
        x = transition(&x, &spec, &mut r).unwrap().x;
        a.push(x.as_slice()[0]);
        b.push(x.as_slice()[1]);
    }
    let n = a.len() as f64;
    for c in [&a, &b] {
        let m = c.iter().sum::<f64>() / n;
        assert!(m.abs() < 3.0 * batch_se(c, 50), "mean {m}");
        let v = c.iter().map(|t| t * t).sum::<f64>() / n - m * m;
        assert!((v / var - 1.0).abs() < 0.1, "variance {v}");
    }
    let cov = a.iter().zip(&b).map(|(p, q)| p * q).sum::<f64>() / n;
    assert!(cov.abs() < 0.1 * var, "covariance {cov}");
}

#[test]
fn corrected_chain_passes_kolmogorov_smirnov() {
    let sd = 0.5;
    let spec = KernelSpec::new(KernelVariant::LangevinSmoothPrior, cfg(0.5), (1, 1))
        .with_prior(gaussian(1, sd * sd))
        .with_constraint(loose_ball(1))
        .with_mh_correction(true);
    let mut r = rng::seeded(23);
    let mut x = ImageVector::zeros((1, 1));
    let mut xs = Vec::with_capacity(100_000);
    for _ in 0..100_000 {
        x = transition(&x, &spec, &mut r).unwrap().x;
        xs.push(x.as_slice()[0]);
    }
    xs.sort_by(f64::total_cmp);
    let normal = Normal::new(0.0, sd).unwrap();
    let n = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = normal.cdf(v);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "KS distance {ks}");
}

#[test]
fn data_driven_and_smooth_chains_coincide() {
    let (var, eps) = (0.5, 0.1);
    let n = 16;
    let mean = ImageVector::zeros((1, n));
    let mut c = cfg(0.02);
    c.epsilon = eps;
    let like = GaussianLikelihood::new(
        ComplexVector::from_real(vec![0.5; n]).unwrap(),
        Arc::new(IdentityOperator::new((1, n))),
        0.5,
    )
    .unwrap();
    let ball = LikelihoodConstraint::new(Arc::new(like), 4.0);
    let dd = KernelSpec::new(KernelVariant::DataDriven, c.clone(), (1, n))
        .with_denoiser(Arc::new(AnalyticGaussianDenoiser::new(mean.clone(), var, eps).unwrap()))
        .with_constraint(ball.clone());
    let smooth = KernelSpec::new(KernelVariant::LangevinSmoothPrior, c, (1, n))
        .with_prior(Arc::new(QuadraticPotential::new(mean, var + eps).unwrap()))
        .with_constraint(ball);
    let (mut ra, mut rb) = (rng::seeded(99), rng::seeded(99));
    let (mut a, mut b) = (ImageVector::zeros((1, n)), ImageVector::zeros((1, n)));
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        a = transition(&a, &dd, &mut ra).unwrap().x;
        b = transition(&b, &smooth, &mut rb).unwrap().x;
        worst = worst.max(a.distance(&b));
    }
    assert!(worst < 1e-10, "chains diverged by {worst}");
}

#[test]
fn thinned_prior_samples_have_prior_moments() {
    let mut c = cfg(0.5);
    c.thinning = 10;
    c.burn_in = 100;
    let spec = KernelSpec::new(KernelVariant::LangevinSmoothPrior, c, (1, 1))
        .with_prior(gaussian(1, 1.0))
        .with_mh_correction(true);
    let xs: Vec<f64> = sample_prior(&spec, 2000, &mut rng::seeded(5))
        .unwrap()
        .into_iter()
        .map(|x| x.as_slice()[0])
        .collect();
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|t| (t - m).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(m.abs() < 3.0 * batch_se(&xs, 40), "mean {m}");
    assert!((v - 1.0).abs() < 0.1, "variance {v}");
}
