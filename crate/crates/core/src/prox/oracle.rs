//! Brute-force prox by subgradient descent. Test oracle only: slow, but it
//! needs nothing from the potential beyond `eval`-compatible subgradients.

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ImageVector, Potential};

/// Largest dimension the oracle accepts.
pub const ORACLE_MAX_DIM: usize = 64;

/// Optimality residual above which the oracle reports non-convergence.
pub const ORACLE_RESIDUAL_TOL: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct OracleProx {
    pub x: ImageVector,
    /// `‖ū - x + λ s̄‖` for the averaged iterate `ū` and averaged subgradient
    /// `s̄` over the final window; zero at an exact prox.
    pub residual: f64,
    pub converged: bool,
}

/// Approximates `argmin_u f(u) + ‖u - x‖² / (2λ)` with steps `λ / k`.
///
/// The returned point is the average of the last tenth of the iterates.
pub fn brute_force_prox(
    base: &dyn Potential,
    x: &ImageVector,
    lambda_my: f64,
    iters: usize,
) -> Result<OracleProx> {
    if x.len() > ORACLE_MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "brute-force prox limited to dimension {ORACLE_MAX_DIM}, got {}",
            x.len()
        )));
    }
    if !(lambda_my > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "prox parameter must be positive, got {lambda_my}"
        )));
    }
    let iters = iters.max(1);
    let window_start = iters - (iters / 10).max(1);
    let n = x.len();
    let x0 = x.as_slice();
    let mut u = x0.to_vec();
    let mut u_sum = vec![0.0; n];
    let mut s_sum = vec![0.0; n];
    let mut count = 0usize;

    for k in 1..=iters {
        let current = x.with_data(u.clone())?;
        let s = base.subgradient(&current)?;
        if k > window_start {
            linalg::axpy(1.0, &u, &mut u_sum);
            linalg::axpy(1.0, s.as_slice(), &mut s_sum);
            count += 1;
        }
        let step = lambda_my / k as f64;
        for ((ui, &si), &xi) in u.iter_mut().zip(s.as_slice()).zip(x0) {
            *ui -= step * (si + (*ui - xi) / lambda_my);
        }
    }

    let inv = 1.0 / count as f64;
    let u_bar: Vec<f64> = u_sum.iter().map(|v| v * inv).collect();
    let residual = u_bar
        .iter()
        .zip(&s_sum)
        .zip(x0)
        .map(|((ub, sb), xi)| {
            let r = ub - xi + lambda_my * sb * inv;
            r * r
        })
        .sum::<f64>()
        .sqrt();
    Ok(OracleProx {
        x: x.with_data(u_bar)?,
        residual,
        converged: residual <= ORACLE_RESIDUAL_TOL,
    })
}
