//! Nested sampling driver.
//!
//! The live population is initialised from independent prior chains. Each
//! iteration removes the lowest-likelihood live point, turns its misfit into
//! the new threshold `τ`, and replaces it with a copy of a random survivor
//! evolved by the constrained kernel. Prior volume shrinks deterministically,
//! `log X_i = -i / n_live`, and the evidence is accumulated in log space.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::batch::Execution;
use crate::error::{Error, Result};
use crate::kernels::{sample_prior_chains, transition, KernelSpec};
use crate::linalg::{log_add_exp, log_sum_exp};
use crate::model::{ConvexLikelihood, ImageVector, LikelihoodConstraint};
use crate::rng;

#[derive(Debug, Clone)]
pub struct LivePoint {
    pub x: ImageVector,
    pub log_like: f64,
}

#[derive(Debug, Clone)]
pub struct DeadPoint {
    pub x: ImageVector,
    pub log_like: f64,
    /// Log prior mass assigned to the point.
    pub log_weight: f64,
}

/// Quadrature rule for the dead-point prior masses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    /// `w_i = X_{i-1} - X_i`
    #[default]
    Rectangle,
    /// Each shell `[X_i, X_{i-1}]` split evenly between its two end points.
    Trapezoid,
}

#[derive(Debug, Clone, Default)]
pub struct NestedOptions {
    pub weight_rule: WeightRule,
    /// Record one [`TraceRecord`] per kernel step.
    pub record_trace: bool,
    /// Scheduling of the initial prior chains.
    pub execution: Execution,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KernelDiagnostics {
    pub kernel_steps: u64,
    pub accepted_steps: u64,
    /// Steps whose likelihood-ball projection hit its iteration limit.
    pub projection_failures: u64,
    pub replacements: u64,
    /// Uncorrected replacements whose final state left the ball, so the
    /// last in-ball state of the chain was used instead.
    pub infeasible_final_states: u64,
    /// Replacements below their threshold. Always zero in a completed run.
    pub constraint_violations: u64,
}

impl KernelDiagnostics {
    pub fn acceptance_rate(&self) -> f64 {
        if self.kernel_steps == 0 {
            return 0.0;
        }
        self.accepted_steps as f64 / self.kernel_steps as f64
    }
}

/// One line of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogRecord {
    pub iteration: usize,
    pub tau: f64,
    pub dead_log_like: f64,
    pub log_evidence: f64,
}

/// One kernel step of a replacement chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub log_like: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct NestedRunResult {
    pub log_evidence: f64,
    pub log_evidence_std: f64,
    /// Kullback-Leibler divergence from prior to posterior, in nats.
    pub information: f64,
    pub n_live: usize,
    /// Dead points in order of removal, followed by the final live points
    /// sorted by likelihood.
    pub dead_points: Vec<DeadPoint>,
    pub posterior_mean: ImageVector,
    pub diagnostics: KernelDiagnostics,
    pub run_log: Vec<RunLogRecord>,
    pub trace: Vec<TraceRecord>,
}

/// `ln(e^a - e^b)` for `a > b`.
fn log_sub_exp(a: f64, b: f64) -> f64 {
    a + (-(b - a).exp_m1()).ln()
}

fn log_volume(i: usize, n_live: usize) -> f64 {
    -(i as f64) / n_live as f64
}

/// Log prior mass of dead point `i` (1-based) out of `n_dead`.
fn dead_log_weight(rule: WeightRule, i: usize, n_dead: usize, n_live: usize) -> f64 {
    let x = |k: usize| log_volume(k, n_live);
    match rule {
        WeightRule::Rectangle => log_sub_exp(x(i - 1), x(i)),
        WeightRule::Trapezoid => {
            if n_dead == 1 {
                log_sub_exp(x(0), x(1))
            } else if i == 1 {
                // X_0 - (X_1 + X_2)/2
                let inv = 1.0 / n_live as f64;
                (-0.5 * ((-inv).exp_m1() + (-2.0 * inv).exp_m1())).ln()
            } else if i == n_dead {
                log_sub_exp(x(i - 1), x(i)) - std::f64::consts::LN_2
            } else {
                log_sub_exp(x(i - 1), x(i + 1)) - std::f64::consts::LN_2
            }
        }
    }
}

/// Normalised posterior weights of the dead points.
pub fn posterior_weights(result: &NestedRunResult) -> Vec<f64> {
    result
        .dead_points
        .iter()
        .map(|d| (d.log_weight + d.log_like - result.log_evidence).exp())
        .collect()
}

fn weighted_mean(points: &[DeadPoint], log_evidence: f64) -> Result<ImageVector> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidArgument("no dead points".into()))?;
    let mut acc = vec![0.0; first.x.len()];
    for d in points {
        let p = (d.log_weight + d.log_like - log_evidence).exp();
        for (a, v) in acc.iter_mut().zip(d.x.as_slice()) {
            *a += p * v;
        }
    }
    first.x.with_data(acc)
}

/// Posterior-weighted average of the dead points.
pub fn posterior_mean(result: &NestedRunResult) -> Result<ImageVector> {
    weighted_mean(&result.dead_points, result.log_evidence)
}

/// `√(H / n_live)`
pub fn evidence_error(result: &NestedRunResult) -> f64 {
    (result.information / result.n_live as f64).sqrt()
}

fn finite_log_like(like: &dyn ConvexLikelihood, x: &ImageVector, iteration: usize) -> Result<f64> {
    let ll = like.log_likelihood(x);
    if ll.is_finite() {
        Ok(ll)
    } else {
        Err(Error::NonFiniteLogLikelihood { iteration })
    }
}

/// Runs nested sampling for the prior described by `template` under
/// `likelihood`.
///
/// `template` must not carry a constraint; one is attached for each
/// threshold. Seeds come from `template.cfg.rng_seed`: stream 0 drives the
/// main loop and stream `1 + i` initialises live point `i`.
pub fn run_nested(
    template: &KernelSpec,
    likelihood: Arc<dyn ConvexLikelihood>,
    opts: &NestedOptions,
) -> Result<NestedRunResult> {
    let template = template.clone().without_constraint();
    template.validate()?;
    let cfg = &template.cfg;
    let (n_live, n_dead) = (cfg.n_live, cfg.n_dead);
    let seed = cfg.rng_seed;

    let mut live: Vec<LivePoint> = sample_prior_chains(&template, n_live, seed, 1, opts.execution)?
        .into_iter()
        .map(|x| {
            let log_like = finite_log_like(likelihood.as_ref(), &x, 0)?;
            Ok(LivePoint { x, log_like })
        })
        .collect::<Result<_>>()?;

    let mut rng = rng::seeded(seed);
    let mut dead_points = Vec::with_capacity(n_dead + n_live);
    let mut run_log = Vec::with_capacity(n_dead);
    let mut trace = Vec::new();
    let mut diag = KernelDiagnostics::default();
    let mut log_z = f64::NEG_INFINITY;
    let mut previous = f64::NEG_INFINITY;

    for iteration in 1..=n_dead {
        let k = live
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.log_like.total_cmp(&b.1.log_like))
            .map(|(i, _)| i)
            .expect("live set is non-empty");
        let dead_ll = live[k].log_like;
        if dead_ll < previous {
            return Err(Error::NonMonotoneThreshold { iteration });
        }
        previous = dead_ll;
        let tau = likelihood.misfit(&live[k].x);
        let log_weight = dead_log_weight(opts.weight_rule, iteration, n_dead, n_live);
        log_z = log_add_exp(log_z, log_weight + dead_ll);
        run_log.push(RunLogRecord {
            iteration,
            tau,
            dead_log_like: dead_ll,
            log_evidence: log_z,
        });

        let mut j = rng.random_range(0..n_live - 1);
        if j >= k {
            j += 1;
        }
        let spec = template
            .clone()
            .with_constraint(LikelihoodConstraint::new(likelihood.clone(), tau));
        let mut x = live[j].x.clone();
        let mut last_feasible = x.clone();
        for _ in 0..cfg.thinning {
            let t = transition(&x, &spec, &mut rng)?;
            diag.kernel_steps += 1;
            diag.accepted_steps += t.accepted as u64;
            diag.projection_failures += (!t.projection_converged) as u64;
            x = t.x;
            if !template.mh_correction && likelihood.misfit(&x) <= tau {
                last_feasible = x.clone();
            }
            if opts.record_trace {
                trace.push(TraceRecord {
                    iteration,
                    log_like: likelihood.log_likelihood(&x),
                    accepted: t.accepted,
                });
            }
        }
        let candidate = if template.mh_correction {
            x
        } else {
            if likelihood.misfit(&x) > tau {
                diag.infeasible_final_states += 1;
            }
            last_feasible
        };
        let new_ll = finite_log_like(likelihood.as_ref(), &candidate, iteration)?;
        diag.replacements += 1;
        if new_ll < dead_ll {
            return Err(Error::ConstraintViolation { iteration });
        }
        let removed = std::mem::replace(
            &mut live[k],
            LivePoint {
                x: candidate,
                log_like: new_ll,
            },
        );
        dead_points.push(DeadPoint {
            x: removed.x,
            log_like: removed.log_like,
            log_weight,
        });
    }

    live.sort_by(|a, b| a.log_like.total_cmp(&b.log_like));
    let log_remainder = log_volume(n_dead, n_live) - (n_live as f64).ln();
    for p in live {
        log_z = log_add_exp(log_z, log_remainder + p.log_like);
        dead_points.push(DeadPoint {
            x: p.x,
            log_like: p.log_like,
            log_weight: log_remainder,
        });
    }
    let log_evidence = log_sum_exp(
        &dead_points
            .iter()
            .map(|d| d.log_weight + d.log_like)
            .collect::<Vec<_>>(),
    );
    debug_assert!((log_evidence - log_z).abs() <= 1e-9 * log_z.abs().max(1.0));

    let information = dead_points
        .iter()
        .map(|d| {
            let p = (d.log_weight + d.log_like - log_evidence).exp();
            if p > 0.0 {
                p * (d.log_like - log_evidence)
            } else {
                0.0
            }
        })
        .sum::<f64>()
        .max(0.0);
    let posterior_mean = weighted_mean(&dead_points, log_evidence)?;
    Ok(NestedRunResult {
        log_evidence,
        log_evidence_std: (information / n_live as f64).sqrt(),
        information,
        n_live,
        dead_points,
        posterior_mean,
        diagnostics: diag,
        run_log,
        trace,
    })
}
