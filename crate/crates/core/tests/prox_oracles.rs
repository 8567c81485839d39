//! Prox and projection routines against independent brute-force oracles.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proxnest::likelihood::{constraint_project, GaussianLikelihood, PrimalDualConfig};
use proxnest::ops::{DenseOperator, Dictionary, MeasurementOperator, WaveletDictionary, WaveletFamily};
use proxnest::prox::{brute_force_prox, l1_wavelet_prox, soft_threshold, L1Potential, WaveletL1Prior};
use proxnest::{ComplexVector, ConvexLikelihood, ImageVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn normals(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect()
}

/// Projection of `x0` onto `{x : ‖Ax - y‖ ≤ r}` from the optimality
/// conditions `x(ν) = (I + νAᵀA)⁻¹(x0 + νAᵀy)`, bisecting on `ν ≥ 0`.
fn kkt_projection(a: &DMatrix<f64>, y: &DVector<f64>, x0: &DVector<f64>, r: f64) -> DVector<f64> {
    let n = a.ncols();
    let ata = a.transpose() * a;
    let aty = a.transpose() * y;
    let solve = |nu: f64| {
        let m = DMatrix::<f64>::identity(n, n) + &ata * nu;
        m.cholesky().expect("positive definite").solve(&(x0 + &aty * nu))
    };
    let resid = |x: &DVector<f64>| (a * x - y).norm();
    if resid(x0) <= r {
        return x0.clone();
    }
    let mut hi = 1.0;
    while resid(&solve(hi)) > r {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if resid(&solve(mid)) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    solve(hi)
}

#[test]
fn soft_threshold_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let n = rng.random_range(1..=16);
        let x = normals(&mut rng, n, 2.0);
        let lam = rng.random_range(0.1..1.0);
        let mu = rng.random_range(0.1..2.0);
        let fast = soft_threshold(&x, lam * mu).unwrap();
        let oracle = brute_force_prox(&L1Potential::new(mu), &ImageVector::from_vec(x).unwrap(), lam, 200_000).unwrap();
        for (a, b) in fast.iter().zip(oracle.x.as_slice()) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }
}

#[test]
fn wavelet_prox_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let shapes = [((8, 8), 2, WaveletFamily::Haar), ((1, 32), 2, WaveletFamily::Daubechies6), ((4, 16), 1, WaveletFamily::Daubechies6)];
    for i in 0..50 {
        let (shape, levels, family) = shapes[i % shapes.len()];
        let dict: Arc<dyn Dictionary> = Arc::new(WaveletDictionary::new(family, levels, shape).unwrap());
        let mu = rng.random_range(0.2..2.0);
        let lam = rng.random_range(0.1..0.8);
        let x = ImageVector::new(normals(&mut rng, shape.0 * shape.1, 1.5), shape).unwrap();
        let fast = l1_wavelet_prox(&x, mu, lam, dict.as_ref()).unwrap();
        let prior = WaveletL1Prior::new(mu, dict).unwrap();
        let oracle = brute_force_prox(&prior, &x, lam, 200_000).unwrap();
        let err = fast.as_slice().iter().zip(oracle.x.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-5, "instance {i}: max error {err}");
    }
}

#[test]
fn likelihood_ball_projection_matches_kkt_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..50 {
        let n = [4usize, 16, 32, 64][i % 4];
        let m = rng.random_range(1..=n);
        let entries = normals(&mut rng, m * n, 1.0 / (n as f64).sqrt());
        let op = Arc::new(DenseOperator::new(m, (1, n), entries.clone()).unwrap());
        let truth = ImageVector::from_vec(normals(&mut rng, n, 1.0)).unwrap();
        let mut y = op.forward(&truth).unwrap().into_parts().0;
        y.iter_mut().zip(normals(&mut rng, m, 0.1)).for_each(|(a, e)| *a += e);
        let sigma = 0.1;
        let like = GaussianLikelihood::new(ComplexVector::from_real(y.clone()).unwrap(), op.clone(), sigma).unwrap();
        let x0 = ImageVector::from_vec(normals(&mut rng, n, 2.0)).unwrap();
        let tau = like.misfit(&x0) * rng.random_range(0.05..0.8);
        let pd = PrimalDualConfig { max_iters: 200_000, tol: 1e-13, ..PrimalDualConfig::for_operator(op.as_ref()) };
        let p = constraint_project(&x0, tau, &like, &pd).unwrap();
        assert!(p.converged, "instance {i} did not converge");

        let a = DMatrix::from_row_slice(m, n, &entries);
        let expected = kkt_projection(&a, &DVector::from_vec(y), &DVector::from_column_slice(x0.as_slice()), (2.0 * tau).sqrt() * sigma);
        let err = p.x.as_slice().iter().zip(expected.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-5, "instance {i} (m={m}, n={n}): max error {err} after {} iterations", p.iterations);
    }
}
