//! Binomial social relations model (SRM) with dyad-level random intercepts
//! and slopes.
//!
//! Directed dyadic count data `y_ij ~ Binomial(n_ij, p_ij)` are decomposed on
//! the logit scale into an intercept, sender and receiver effects, a fixed
//! covariate effect, symmetric dyad-level intercepts and slopes, and optional
//! additive overdispersion:
//!
//! ```text
//! logit(p_ij) = alpha + a_i + b_j + beta * x_ij + u_|ij| + v_|ij| * x_ij + d_ij
//! ```
//!
//! `(a_i, b_i)` and `(u, v)` are bivariate normal with zero means; `|ij|`
//! indexes the unordered dyad, so both directions of a dyad share the same
//! intercept `u` and slope `v`. Because the dyad effects carry a random slope,
//! the dyad-level variance is a quadratic function of the covariate, and the
//! dyadic reciprocity correlation becomes covariate-dependent:
//!
//! ```text
//! rho(x) = q(x) / (q(x) + sigma_d^2 + pi^2/3),   q(x) = sigma_u^2 + 2*sigma_uv*x + sigma_v^2*x^2
//! ```
//!
//! The crate provides:
//!
//! - [`data`]: ingestion and validation of directed dyadic observations,
//!   including incomplete (block) designs and symmetric dyad indexing.
//! - [`model`]: the log-likelihood, log-prior, and the unconstrained posterior
//!   density with exact analytic gradients.
//! - [`sim`]: a seeded generative simulator for parameter-recovery studies.
//! - [`inference`]: a dynamic-trajectory Hamiltonian (no-U-turn) sampler with
//!   warmup adaptation, plus split R-hat / effective-sample-size diagnostics.
//! - [`reciprocity`]: the dyadic variance function and reciprocity correlation
//!   `rho(x)`, pointwise and as posterior curves.
//! - [`cli`]: the `srm` command-line entry points (`simulate`, `fit`,
//!   `reciprocity`) used by the thin binary.
//!
//! See the crate `examples/` directory for runnable end-to-end walkthroughs.

pub mod cli;
pub mod data;
pub mod error;
pub mod inference;
pub mod model;
pub mod reciprocity;
pub mod sim;

pub use data::{DirectedObservation, DyadIndex, NetworkDataset, NodeId};
pub use error::SrmError;
pub use inference::{fit, ChainDiagnostics, PosteriorSamples, SamplerConfig};
pub use model::{FixedEffects, LatentEffects, ModelConfig, VarianceComponents};
pub use reciprocity::{
    dyadic_reciprocity, dyadic_variance, generalized_reciprocity, reciprocity_curve,
    ReciprocityCurve,
};
pub use sim::{simulate, SimulationSpec};

/// Variance of the standard logistic distribution, used as the latent-scale
/// residual variance of the binomial model. Computed from `pi`, never the
/// rounded 3.29 literal.
pub const LATENT_RESIDUAL_VARIANCE: f64 = std::f64::consts::PI * std::f64::consts::PI / 3.0;
