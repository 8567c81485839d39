//! Numerical self-checks for a configured experiment: operator adjointness,
//! Moreau-Yosida gradients of the prior and projections onto the
//! likelihood ball.

use std::sync::Arc;

use proxnest::denoiser::tweedie_score;
use proxnest::likelihood::PrimalDualConfig;
use proxnest::prox::{moreau_eval, moreau_grad, MoreauEnvelope};
use proxnest::{rng, ComplexVector, ConvexLikelihood, ImageVector, Shape};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::experiment::{build_likelihood, build_template, observe};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Worst value of the checked error over all trials.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

const TRIALS: u64 = 10;

fn gaussian_vec(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng::seeded(seed);
    (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
}

fn random_image(seed: u64, shape: Shape) -> ImageVector {
    ImageVector::new(gaussian_vec(seed, shape.0 * shape.1), shape).expect("shape matches length")
}

pub fn run_checks(cfg: &ExperimentConfig) -> CliResult<Vec<CheckResult>> {
    cfg.validate()?;
    let obs = observe(cfg)?;
    let shape = obs.truth.shape();
    let op = obs.operator.as_ref();
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for t in 0..TRIALS {
        let x = random_image(1000 + t, shape);
        let m = op.output_dim();
        let im = if op.real_output() { vec![0.0; m] } else { gaussian_vec(3000 + t, m) };
        let y = ComplexVector::new(gaussian_vec(2000 + t, m), im)?;
        let lhs = op.forward(&x)?.real_dot(&y);
        let rhs = x.dot(&op.adjoint(&y)?);
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
    }
    out.push(CheckResult::new("operator_adjoint", worst, 1e-10));

    let template = build_template(cfg, shape, obs.sigma)?;
    if let Some(prior) = template.prior.clone().filter(|p| p.has_prox()) {
        let env = MoreauEnvelope::new(prior, template.lambda_prior())?;
        let mut worst = 0.0f64;
        for t in 0..TRIALS {
            let x = random_image(4000 + t, shape);
            let v = random_image(5000 + t, shape);
            let v = v.with_data(v.as_slice().iter().map(|a| a / v.norm()).collect())?;
            let h = 1e-6 * x.norm().max(1.0);
            let shift = |s: f64| x.with_data(x.as_slice().iter().zip(v.as_slice()).map(|(a, b)| a + s * b).collect());
            let fd = (moreau_eval(&env, &shift(h)?)? - moreau_eval(&env, &shift(-h)?)?) / (2.0 * h);
            let exact = moreau_grad(&env, &x)?.dot(&v);
            worst = worst.max((fd - exact).abs() / exact.abs().max(1.0));
        }
        out.push(CheckResult::new("moreau_gradient", worst, 1e-4));
    }
    if let Some(d) = template.denoiser.clone() {
        let x = random_image(6000, shape);
        let s = tweedie_score(d.as_ref(), &x)?;
        let bad = s.as_slice().iter().filter(|v| !v.is_finite()).count();
        out.push(CheckResult::new("denoiser_score_finite", bad as f64, 0.0));
    }

    // The solver runs at a tight tolerance here so the check measures its
    // fixed point rather than the sampler's speed/accuracy trade-off.
    let like = build_likelihood(cfg, &obs)?;
    let pd = PrimalDualConfig {
        max_iters: 50_000,
        tol: 1e-12,
        ..*like.primal_dual()
    };
    let like: Arc<dyn ConvexLikelihood> = Arc::new(like.with_primal_dual(pd)?);
    let mut feas = 0.0f64;
    let mut idem = 0.0f64;
    for t in 0..TRIALS {
        let x = random_image(7000 + t, shape);
        let misfit = like.misfit(&x);
        let tau = 0.5 * misfit;
        let p = like.project(&x, tau)?;
        feas = feas.max((like.misfit(&p.x) - tau).max(0.0) / tau);
        let again = like.project(&p.x, tau * (1.0 + 1e-9))?;
        idem = idem.max(again.x.distance(&p.x) / p.x.norm().max(1.0));
    }
    out.push(CheckResult::new("projection_feasibility", feas, 1e-8));
    out.push(CheckResult::new("projection_idempotence", idem, 1e-8));
    Ok(out)
}
