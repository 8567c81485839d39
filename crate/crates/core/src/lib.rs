//! Proximal nested sampling for Bayesian model comparison in imaging inverse
//! problems with log-convex likelihoods.
//!
//! The evidence of a model is computed by nested sampling, with new live
//! points drawn from the prior restricted to a likelihood ball by Langevin
//! kernels. The ball constraint enters the kernels through its Moreau-Yosida
//! envelope (a projection), non-smooth priors through their proximity
//! operators, and learned priors through a denoiser via Tweedie's identity.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod denoiser;
pub mod error;
pub mod kernels;
pub mod likelihood;
pub mod linalg;
pub mod model;
pub mod nested;
pub mod ops;
pub mod prox;
pub mod rng;

pub use batch::Execution;
pub use error::{Error, Result};
pub use kernels::{KernelSpec, KernelVariant};
pub use likelihood::{GaussianLikelihood, PrimalDualConfig};
pub use model::{
    validate_config, ComplexVector, ConvexLikelihood, ImageVector, LikelihoodConstraint,
    Potential, Projection, RunConfig, Shape,
};
pub use nested::{run_nested, NestedOptions, NestedRunResult};
