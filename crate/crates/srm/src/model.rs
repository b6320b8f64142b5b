//! Model definition: unknowns, log-likelihood, log-prior, and gradients.
//!
//! The observation model for a directed cell `(i, j)` with `n` trials is
//!
//! ```text
//! y_ij ~ Binomial(n_ij, p_ij)
//! logit(p_ij) = alpha + a_i + b_j + beta * x_ij + u_|ij| + v_|ij| * x_ij + d_ij
//! ```
//!
//! with `(a_i, b_i)` bivariate normal across nodes, `(u, v)` bivariate normal
//! across unordered dyads, and `d_ij ~ Normal(0, sigma_d^2)` an optional
//! per-cell overdispersion term.
//!
//! Hyperpriors are fixed and weakly informative: `alpha, beta ~ Normal(0, 5^2)`,
//! every standard deviation `~ half-Normal(0, 2^2)`, and both correlations
//! uniform on (-1, 1). Sampling works on an unconstrained vector (log for
//! standard deviations, atanh for correlations); [`Posterior::logp_and_grad`]
//! is the unconstrained target including the change-of-variable Jacobians,
//! while [`log_posterior`] reports the constrained-scale kernel without them.

use crate::data::{DirectedObservation, DyadIndex, NetworkDataset};
use crate::error::{Result, SrmError};
use statrs::function::factorial::ln_binomial;

/// Population-level fixed effects on the logit scale.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FixedEffects {
    /// Intercept `alpha`.
    pub alpha: f64,
    /// Dyad-covariate coefficient `beta`.
    pub beta: f64,
}

/// Standard deviations and correlations of the random-effect distributions.
///
/// The two 2x2 covariance matrices implied by the `(sd, sd, correlation)`
/// triples are positive semi-definite by construction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VarianceComponents {
    /// Sender (row) effect sd.
    pub sigma_a: f64,
    /// Receiver (column) effect sd.
    pub sigma_b: f64,
    /// Sender-receiver correlation (generalized reciprocity).
    pub rho_ab: f64,
    /// Dyad intercept sd.
    pub sigma_u: f64,
    /// Dyad slope sd.
    pub sigma_v: f64,
    /// Dyad intercept-slope correlation.
    pub rho_uv: f64,
    /// Overdispersion sd; must be 0 exactly when overdispersion is disabled.
    pub sigma_d: f64,
}

impl VarianceComponents {
    /// Check ranges: positive sender/receiver sds, nonnegative dyad and
    /// overdispersion sds, correlations strictly inside (-1, 1), and
    /// `sigma_d = 0` iff overdispersion is disabled.
    pub fn validate(&self, config: &ModelConfig) -> Result<()> {
        let bad = |msg: String| Err(SrmError::InvalidInput(msg));
        for (name, value) in [
            ("sigma_a", self.sigma_a),
            ("sigma_b", self.sigma_b),
            ("sigma_u", self.sigma_u),
            ("sigma_v", self.sigma_v),
            ("sigma_d", self.sigma_d),
        ] {
            if !value.is_finite() || value < 0.0 {
                return bad(format!("{name} must be finite and nonnegative, got {value}"));
            }
        }
        if self.sigma_a == 0.0 || self.sigma_b == 0.0 {
            return bad("sigma_a and sigma_b must be positive".into());
        }
        for (name, value) in [("rho_ab", self.rho_ab), ("rho_uv", self.rho_uv)] {
            if !value.is_finite() || value <= -1.0 || value >= 1.0 {
                return bad(format!("{name} must lie strictly inside (-1, 1), got {value}"));
            }
        }
        if !config.overdispersion_enabled && self.sigma_d != 0.0 {
            return bad("sigma_d must be 0 when overdispersion is disabled".into());
        }
        Ok(())
    }
}

/// Realized random effects, conformable with one dataset.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LatentEffects {
    /// Sender effects `a_i`, one per node.
    pub sender: Vec<f64>,
    /// Receiver effects `b_i`, one per node.
    pub receiver: Vec<f64>,
    /// Dyad intercepts `u`, one per unordered dyad.
    pub dyad_intercept: Vec<f64>,
    /// Dyad slopes `v`, one per unordered dyad.
    pub dyad_slope: Vec<f64>,
    /// Overdispersion terms `d_ij`, one per directed observation; empty when
    /// overdispersion is disabled.
    pub overdispersion: Vec<f64>,
}

impl LatentEffects {
    /// All-zero effects conformable with `dataset`.
    pub fn zeros(dataset: &NetworkDataset, config: &ModelConfig) -> Self {
        let n = dataset.n_nodes();
        let d = dataset.n_dyads();
        let m = if config.overdispersion_enabled {
            dataset.n_observations()
        } else {
            0
        };
        LatentEffects {
            sender: vec![0.0; n],
            receiver: vec![0.0; n],
            dyad_intercept: vec![0.0; d],
            dyad_slope: vec![0.0; d],
            overdispersion: vec![0.0; m],
        }
    }

    fn check_dims(&self, dataset: &NetworkDataset, config: &ModelConfig) -> Result<()> {
        let n = dataset.n_nodes();
        let d = dataset.n_dyads();
        let m = if config.overdispersion_enabled {
            dataset.n_observations()
        } else {
            0
        };
        let checks = [
            ("sender", self.sender.len(), n),
            ("receiver", self.receiver.len(), n),
            ("dyad_intercept", self.dyad_intercept.len(), d),
            ("dyad_slope", self.dyad_slope.len(), d),
            ("overdispersion", self.overdispersion.len(), m),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(SrmError::DimensionMismatch(format!(
                    "{name}: got {got}, want {want}"
                )));
            }
        }
        Ok(())
    }
}

/// Structural switches of the model.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelConfig {
    /// Include the per-cell overdispersion term `d_ij` (default true).
    pub overdispersion_enabled: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            overdispersion_enabled: true,
        }
    }
}

impl ModelConfig {
    /// Residual variance of the latent logistic scale, exactly pi^2/3.
    pub fn latent_residual_variance(&self) -> f64 {
        crate::LATENT_RESIDUAL_VARIANCE
    }
}

/// Numerically stable inverse logit; no overflow for |eta| up to 700.
pub fn inv_logit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(eta))` without overflow; `n * log1pexp(eta)` is the stable
/// form of `-n log(1-p)` used by the likelihood.
fn log1pexp(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

/// Linear predictor of one directed cell:
/// `alpha + a_ego + b_alter + beta*x + u + v*x + d`.
///
/// `dyad` locates the cell's shared (u, v) pair and `obs_index` its
/// overdispersion term; the `d` term is 0 when overdispersion is disabled
/// (empty vector).
pub fn linear_predictor(
    obs: &DirectedObservation,
    dyad: DyadIndex,
    obs_index: usize,
    fx: &FixedEffects,
    latent: &LatentEffects,
) -> f64 {
    let x = obs.covariate;
    let d = latent.overdispersion.get(obs_index).copied().unwrap_or(0.0);
    fx.alpha
        + latent.sender[obs.ego.0]
        + latent.receiver[obs.alter.0]
        + fx.beta * x
        + latent.dyad_intercept[dyad.0]
        + latent.dyad_slope[dyad.0] * x
        + d
}

/// Binomial log-likelihood of the full dataset, including the `ln C(n, y)`
/// terms so values are comparable to external calculations. Evaluated as
/// `ln C(n,y) + y*eta - n*log(1+exp(eta))`, which never forms `log(p)` from a
/// rounded probability.
pub fn log_likelihood(
    dataset: &NetworkDataset,
    fx: &FixedEffects,
    latent: &LatentEffects,
) -> Result<f64> {
    let config = ModelConfig {
        overdispersion_enabled: !latent.overdispersion.is_empty(),
    };
    latent.check_dims(dataset, &config)?;
    let mut total = 0.0;
    for (m, obs) in dataset.observations().iter().enumerate() {
        let eta = linear_predictor(obs, dataset.obs_dyad(m), m, fx, latent);
        total += ln_binomial(obs.trials, obs.successes) + obs.successes as f64 * eta
            - obs.trials as f64 * log1pexp(eta);
    }
    Ok(total)
}

const FIXED_PRIOR_SD: f64 = 5.0;
const SD_PRIOR_SCALE: f64 = 2.0;
const LN_2PI: f64 = 1.837877066409345483560659472811;

fn normal_logpdf(x: f64, sd: f64) -> f64 {
    -0.5 * LN_2PI - sd.ln() - x * x / (2.0 * sd * sd)
}

/// log-density of half-Normal(0, scale^2) at `x >= 0`.
fn half_normal_logpdf(x: f64, scale: f64) -> f64 {
    std::f64::consts::LN_2 + normal_logpdf(x, scale)
}

/// Zero-mean bivariate normal log-density with sds `s1, s2`, correlation `rho`.
fn bvn_logpdf(z1: f64, z2: f64, s1: f64, s2: f64, rho: f64) -> f64 {
    let c = 1.0 - rho * rho;
    let t1 = z1 / s1;
    let t2 = z2 / s2;
    let q = (t1 * t1 - 2.0 * rho * t1 * t2 + t2 * t2) / c;
    -LN_2PI - s1.ln() - s2.ln() - 0.5 * c.ln() - 0.5 * q
}

/// Joint log-prior: bivariate normals for the `(a_i, b_i)` and `(u, v)` pairs,
/// normals for the `d_ij`, and the fixed hyperpriors (constrained scale; no
/// transform Jacobians).
pub fn log_prior(
    fx: &FixedEffects,
    components: &VarianceComponents,
    latent: &LatentEffects,
    config: &ModelConfig,
    dataset: &NetworkDataset,
) -> Result<f64> {
    components.validate(config)?;
    latent.check_dims(dataset, config)?;
    let c = components;

    let mut total = 0.0;
    for (a, b) in latent.sender.iter().zip(&latent.receiver) {
        total += bvn_logpdf(*a, *b, c.sigma_a, c.sigma_b, c.rho_ab);
    }
    for (u, v) in latent.dyad_intercept.iter().zip(&latent.dyad_slope) {
        total += bvn_logpdf(*u, *v, c.sigma_u, c.sigma_v, c.rho_uv);
    }
    if config.overdispersion_enabled {
        for d in &latent.overdispersion {
            total += normal_logpdf(*d, c.sigma_d);
        }
    }

    // Hyperpriors: Normal(0, 5^2) on alpha/beta, half-Normal(0, 2^2) on sds,
    // Uniform(-1, 1) on correlations (constant density 1/2).
    total += normal_logpdf(fx.alpha, FIXED_PRIOR_SD) + normal_logpdf(fx.beta, FIXED_PRIOR_SD);
    total += half_normal_logpdf(c.sigma_a, SD_PRIOR_SCALE)
        + half_normal_logpdf(c.sigma_b, SD_PRIOR_SCALE)
        + half_normal_logpdf(c.sigma_u, SD_PRIOR_SCALE)
        + half_normal_logpdf(c.sigma_v, SD_PRIOR_SCALE);
    if config.overdispersion_enabled {
        total += half_normal_logpdf(c.sigma_d, SD_PRIOR_SCALE);
    }
    total -= 2.0 * std::f64::consts::LN_2;
    Ok(total)
}

/// Constrained-scale log-posterior kernel: `log_likelihood + log_prior`,
/// without unconstraining-transform Jacobians.
pub fn log_posterior(
    dataset: &NetworkDataset,
    fx: &FixedEffects,
    components: &VarianceComponents,
    latent: &LatentEffects,
    config: &ModelConfig,
) -> Result<f64> {
    Ok(log_likelihood(dataset, fx, latent)? + log_prior(fx, components, latent, config, dataset)?)
}

/// Unconstrained-space posterior bound to one dataset: parameter packing,
/// target value, and its exact analytic gradient.
///
/// Layout of the parameter vector (dimension [`Posterior::dim`]):
///
/// ```text
/// [alpha, beta,
///  log sigma_a, log sigma_b, atanh rho_ab,
///  log sigma_u, log sigma_v, atanh rho_uv,
///  log sigma_d,                       (only with overdispersion)
///  za_0..za_{N-1}, zb_0..zb_{N-1},
///  zu_0..zu_{D-1}, zv_0..zv_{D-1},
///  zd_0..zd_{M-1}]                    (only with overdispersion)
/// ```
///
/// The latent blocks are sampled non-centered: each coordinate is an
/// independent standard-normal disturbance mapped through the component
/// scales, `a_i = sigma_a za_i`, `b_i = sigma_b (rho_ab za_i + c zb_i)` with
/// `c = sqrt(1 - rho_ab^2)`, and likewise for the dyad pair and the
/// overdispersion block. A latent effect that is weakly identified by its
/// own few observations then stays uncorrelated with its scale parameter in
/// sampling space, instead of forming the funnel the centered form produces.
/// [`Posterior::constrain`] and [`Posterior::unpack`] return the centered
/// effects, so downstream consumers never see the z-scale.
pub struct Posterior<'a> {
    dataset: &'a NetworkDataset,
    config: ModelConfig,
    // Flattened observation table for the gradient hot loop.
    ego: Vec<u32>,
    alter: Vec<u32>,
    dyad: Vec<u32>,
    x: Vec<f64>,
    y: Vec<f64>,
    n: Vec<f64>,
    ln_binom_total: f64,
}

/// Index of the first latent coordinate given the population block size.
impl<'a> Posterior<'a> {
    pub fn new(dataset: &'a NetworkDataset, config: ModelConfig) -> Self {
        let obs = dataset.observations();
        let mut ln_binom_total = 0.0;
        let mut ego = Vec::with_capacity(obs.len());
        let mut alter = Vec::with_capacity(obs.len());
        let mut dyad = Vec::with_capacity(obs.len());
        let mut x = Vec::with_capacity(obs.len());
        let mut y = Vec::with_capacity(obs.len());
        let mut n = Vec::with_capacity(obs.len());
        for (m, o) in obs.iter().enumerate() {
            ego.push(o.ego.0 as u32);
            alter.push(o.alter.0 as u32);
            dyad.push(dataset.obs_dyad(m).0 as u32);
            x.push(o.covariate);
            y.push(o.successes as f64);
            n.push(o.trials as f64);
            ln_binom_total += ln_binomial(o.trials, o.successes);
        }
        Posterior {
            dataset,
            config,
            ego,
            alter,
            dyad,
            x,
            y,
            n,
            ln_binom_total,
        }
    }

    pub fn dataset(&self) -> &NetworkDataset {
        self.dataset
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Number of population-level parameters (9 with overdispersion, 8 without).
    pub fn n_pop(&self) -> usize {
        if self.config.overdispersion_enabled {
            9
        } else {
            8
        }
    }

    /// Total dimension of the unconstrained parameter vector.
    pub fn dim(&self) -> usize {
        let n = self.dataset.n_nodes();
        let d = self.dataset.n_dyads();
        let m = if self.config.overdispersion_enabled {
            self.dataset.n_observations()
        } else {
            0
        };
        self.n_pop() + 2 * n + 2 * d + m
    }

    /// Names of the population parameters, in vector order (constrained scale).
    pub fn pop_names(&self) -> Vec<&'static str> {
        let mut names = vec![
            "alpha", "beta", "sigma_a", "sigma_b", "rho_ab", "sigma_u", "sigma_v", "rho_uv",
        ];
        if self.config.overdispersion_enabled {
            names.push("sigma_d");
        }
        names
    }

    /// Names of the latent coordinates, in vector order after the population
    /// block, using node labels and dyad pairs.
    pub fn latent_names(&self) -> Vec<String> {
        let ds = self.dataset;
        let mut names = Vec::with_capacity(self.dim() - self.n_pop());
        for l in ds.node_labels() {
            names.push(format!("a[{l}]"));
        }
        for l in ds.node_labels() {
            names.push(format!("b[{l}]"));
        }
        for dy in ds.dyads() {
            names.push(format!(
                "u[{}:{}]",
                ds.node_label(dy.lo),
                ds.node_label(dy.hi)
            ));
        }
        for dy in ds.dyads() {
            names.push(format!(
                "v[{}:{}]",
                ds.node_label(dy.lo),
                ds.node_label(dy.hi)
            ));
        }
        if self.config.overdispersion_enabled {
            for o in ds.observations() {
                names.push(format!(
                    "d[{}>{}]",
                    ds.node_label(o.ego),
                    ds.node_label(o.alter)
                ));
            }
        }
        names
    }

    /// Pack constrained parameters into an unconstrained vector, inverting
    /// the non-centered transform on the latent blocks.
    pub fn pack(
        &self,
        fx: &FixedEffects,
        components: &VarianceComponents,
        latent: &LatentEffects,
    ) -> Result<Vec<f64>> {
        components.validate(&self.config)?;
        latent.check_dims(self.dataset, &self.config)?;
        let c = components;
        let c_ab = (1.0 - c.rho_ab * c.rho_ab).sqrt();
        let c_uv = (1.0 - c.rho_uv * c.rho_uv).sqrt();
        let mut theta = Vec::with_capacity(self.dim());
        theta.push(fx.alpha);
        theta.push(fx.beta);
        theta.push(c.sigma_a.ln());
        theta.push(c.sigma_b.ln());
        theta.push(c.rho_ab.atanh());
        theta.push(c.sigma_u.ln());
        theta.push(c.sigma_v.ln());
        theta.push(c.rho_uv.atanh());
        if self.config.overdispersion_enabled {
            theta.push(c.sigma_d.ln());
        }
        theta.extend(latent.sender.iter().map(|a| a / c.sigma_a));
        theta.extend(
            latent
                .sender
                .iter()
                .zip(&latent.receiver)
                .map(|(a, b)| (b / c.sigma_b - c.rho_ab * (a / c.sigma_a)) / c_ab),
        );
        theta.extend(latent.dyad_intercept.iter().map(|u| u / c.sigma_u));
        theta.extend(
            latent
                .dyad_intercept
                .iter()
                .zip(&latent.dyad_slope)
                .map(|(u, v)| (v / c.sigma_v - c.rho_uv * (u / c.sigma_u)) / c_uv),
        );
        theta.extend(latent.overdispersion.iter().map(|d| d / c.sigma_d));
        Ok(theta)
    }

    /// Unpack an unconstrained vector into constrained parameters, with the
    /// latent effects on the centered (model) scale.
    pub fn unpack(&self, theta: &[f64]) -> (FixedEffects, VarianceComponents, LatentEffects) {
        assert_eq!(theta.len(), self.dim(), "parameter vector length");
        let od = self.config.overdispersion_enabled;
        let fx = FixedEffects {
            alpha: theta[0],
            beta: theta[1],
        };
        let c = VarianceComponents {
            sigma_a: theta[2].exp(),
            sigma_b: theta[3].exp(),
            rho_ab: theta[4].tanh(),
            sigma_u: theta[5].exp(),
            sigma_v: theta[6].exp(),
            rho_uv: theta[7].tanh(),
            sigma_d: if od { theta[8].exp() } else { 0.0 },
        };
        let c_ab = (1.0 - c.rho_ab * c.rho_ab).sqrt();
        let c_uv = (1.0 - c.rho_uv * c.rho_uv).sqrt();
        let n = self.dataset.n_nodes();
        let d = self.dataset.n_dyads();
        let m = if od { self.dataset.n_observations() } else { 0 };
        let mut at = self.n_pop();
        let mut take = |len: usize| {
            let slice = &theta[at..at + len];
            at += len;
            slice
        };
        let za = take(n);
        let zb = take(n);
        let zu = take(d);
        let zv = take(d);
        let zd = take(m);
        let latent = LatentEffects {
            sender: za.iter().map(|z| c.sigma_a * z).collect(),
            receiver: za
                .iter()
                .zip(zb)
                .map(|(z1, z2)| c.sigma_b * (c.rho_ab * z1 + c_ab * z2))
                .collect(),
            dyad_intercept: zu.iter().map(|z| c.sigma_u * z).collect(),
            dyad_slope: zu
                .iter()
                .zip(zv)
                .map(|(z1, z2)| c.sigma_v * (c.rho_uv * z1 + c_uv * z2))
                .collect(),
            overdispersion: zd.iter().map(|z| c.sigma_d * z).collect(),
        };
        (fx, c, latent)
    }

    /// Map an unconstrained vector to the constrained scale, same layout:
    /// exp on log-sd slots, tanh on correlation slots, and the non-centered
    /// latent disturbances mapped to centered effects.
    pub fn constrain(&self, theta: &[f64]) -> Vec<f64> {
        let (fx, c, latent) = self.unpack(theta);
        let mut out = Vec::with_capacity(self.dim());
        out.push(fx.alpha);
        out.push(fx.beta);
        out.push(c.sigma_a);
        out.push(c.sigma_b);
        out.push(c.rho_ab);
        out.push(c.sigma_u);
        out.push(c.sigma_v);
        out.push(c.rho_uv);
        if self.config.overdispersion_enabled {
            out.push(c.sigma_d);
        }
        out.extend_from_slice(&latent.sender);
        out.extend_from_slice(&latent.receiver);
        out.extend_from_slice(&latent.dyad_intercept);
        out.extend_from_slice(&latent.dyad_slope);
        out.extend_from_slice(&latent.overdispersion);
        out
    }

    /// Unconstrained sampling target: the log-posterior over the
    /// non-centered coordinates, including the log/atanh transform
    /// Jacobians, with its exact gradient written into `grad`. This is the
    /// function the sampler (and any finite-difference check of it) sees.
    pub fn logp_and_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        assert_eq!(theta.len(), self.dim(), "parameter vector length");
        assert_eq!(grad.len(), self.dim(), "gradient buffer length");
        grad.fill(0.0);

        let od = self.config.overdispersion_enabled;
        let n_nodes = self.dataset.n_nodes();
        let n_dyads = self.dataset.n_dyads();
        let n_obs = self.x.len();
        let n_pop = self.n_pop();
        let a_at = n_pop;
        let b_at = a_at + n_nodes;
        let u_at = b_at + n_nodes;
        let v_at = u_at + n_dyads;
        let d_at = v_at + n_dyads;

        let alpha = theta[0];
        let beta = theta[1];
        let (t_a, t_b, r_ab) = (theta[2], theta[3], theta[4]);
        let (t_u, t_v, r_uv) = (theta[5], theta[6], theta[7]);
        let (sigma_a, sigma_b, rho_ab) = (t_a.exp(), t_b.exp(), r_ab.tanh());
        let (sigma_u, sigma_v, rho_uv) = (t_u.exp(), t_v.exp(), r_uv.tanh());
        let c_ab = (1.0 - rho_ab * rho_ab).sqrt();
        let c_uv = (1.0 - rho_uv * rho_uv).sqrt();
        let (t_d, sigma_d) = if od {
            (theta[8], theta[8].exp())
        } else {
            (0.0, 0.0)
        };

        // Likelihood. The residual g = y - n*p is the gradient of the
        // log-likelihood in eta; here it is first accumulated into each
        // latent coordinate's slot as the raw per-effect load (sum of g, or
        // of g*x for slope terms), to be chain-ruled below.
        let mut logp = self.ln_binom_total;
        for m in 0..n_obs {
            let x = self.x[m];
            let i = self.ego[m] as usize;
            let j = self.alter[m] as usize;
            let k = self.dyad[m] as usize;
            let a_i = sigma_a * theta[a_at + i];
            let b_j = sigma_b * (rho_ab * theta[a_at + j] + c_ab * theta[b_at + j]);
            let u_k = sigma_u * theta[u_at + k];
            let v_k = sigma_v * (rho_uv * theta[u_at + k] + c_uv * theta[v_at + k]);
            let mut eta = alpha + a_i + b_j + beta * x + u_k + v_k * x;
            if od {
                eta += sigma_d * theta[d_at + m];
            }
            let p = inv_logit(eta);
            logp += self.y[m] * eta - self.n[m] * log1pexp(eta);
            let g = self.y[m] - self.n[m] * p;
            grad[0] += g;
            grad[1] += g * x;
            grad[a_at + i] += g;
            grad[b_at + j] += g;
            grad[u_at + k] += g;
            grad[v_at + k] += g * x;
            if od {
                grad[d_at + m] += g;
            }
        }

        // Non-centered pair blocks. With loads S = sum of g over the first
        // coordinate's observations and R over the second's, and effects
        // e1 = s1 z1, e2 = s2 (rho z1 + c z2):
        //   d/dz1      = s1 S + s2 rho R - z1
        //   d/dz2      = s2 c R - z2
        //   d/dlog s1  = S e1            (plus the hyperprior term below)
        //   d/dlog s2  = R e2
        //   d/datanh r = R s2 (c^2 z1 - rho c z2)
        // The z prior contributes -z^2/2 per coordinate.
        let pair_block = |z1_at: usize,
                              z2_at: usize,
                              len: usize,
                              s1: f64,
                              s2: f64,
                              rho: f64,
                              c: f64,
                              grad: &mut [f64]|
         -> (f64, f64, f64, f64) {
            let mut lp = -(len as f64) * LN_2PI;
            let (mut g1, mut g2, mut gr) = (0.0, 0.0, 0.0);
            for idx in 0..len {
                let z1 = theta[z1_at + idx];
                let z2 = theta[z2_at + idx];
                let load1 = grad[z1_at + idx];
                let load2 = grad[z2_at + idx];
                let e1 = s1 * z1;
                let e2 = s2 * (rho * z1 + c * z2);
                grad[z1_at + idx] = s1 * load1 + s2 * rho * load2 - z1;
                grad[z2_at + idx] = s2 * c * load2 - z2;
                g1 += load1 * e1;
                g2 += load2 * e2;
                gr += load2 * s2 * (c * c * z1 - rho * c * z2);
                lp -= 0.5 * (z1 * z1 + z2 * z2);
            }
            (lp, g1, g2, gr)
        };

        let (lp_ab, g_ta, g_tb, g_rab) =
            pair_block(a_at, b_at, n_nodes, sigma_a, sigma_b, rho_ab, c_ab, grad);
        logp += lp_ab;
        grad[2] += g_ta;
        grad[3] += g_tb;
        grad[4] += g_rab;

        let (lp_uv, g_tu, g_tv, g_ruv) =
            pair_block(u_at, v_at, n_dyads, sigma_u, sigma_v, rho_uv, c_uv, grad);
        logp += lp_uv;
        grad[5] += g_tu;
        grad[6] += g_tv;
        grad[7] += g_ruv;

        if od {
            let mut sum_sq = 0.0;
            let mut g_td = 0.0;
            for m in 0..n_obs {
                let z = theta[d_at + m];
                let load = grad[d_at + m];
                grad[d_at + m] = sigma_d * load - z;
                g_td += load * sigma_d * z;
                sum_sq += z * z;
            }
            logp += -0.5 * (n_obs as f64) * LN_2PI - 0.5 * sum_sq;
            grad[8] += g_td;
        }

        // Hyperpriors and transform Jacobians. Per sd: half-Normal(0, 2^2)
        // plus Jacobian log sigma, giving d/dt = -sigma^2/4 + 1. Per
        // correlation: Uniform(-1,1) plus Jacobian log(1 - rho^2), giving
        // d/dr = -2 rho.
        let fsd2 = FIXED_PRIOR_SD * FIXED_PRIOR_SD;
        logp += -LN_2PI - 2.0 * FIXED_PRIOR_SD.ln()
            - 0.5 * (alpha * alpha + beta * beta) / fsd2;
        grad[0] += -alpha / fsd2;
        grad[1] += -beta / fsd2;

        let scale2 = SD_PRIOR_SCALE * SD_PRIOR_SCALE;
        let sd_term = |t: f64, sigma: f64, slot: usize, grad: &mut [f64]| -> f64 {
            grad[slot] += -sigma * sigma / scale2 + 1.0;
            std::f64::consts::LN_2 - 0.5 * LN_2PI - SD_PRIOR_SCALE.ln()
                - 0.5 * sigma * sigma / scale2
                + t
        };
        logp += sd_term(t_a, sigma_a, 2, grad);
        logp += sd_term(t_b, sigma_b, 3, grad);
        logp += sd_term(t_u, sigma_u, 5, grad);
        logp += sd_term(t_v, sigma_v, 6, grad);
        if od {
            logp += sd_term(t_d, sigma_d, 8, grad);
        }

        for (rho, slot) in [(rho_ab, 4usize), (rho_uv, 7usize)] {
            logp += -std::f64::consts::LN_2 + (1.0 - rho * rho).ln();
            grad[slot] += -2.0 * rho;
        }

        logp
    }

    /// Allocating convenience wrapper around [`Posterior::logp_and_grad`].
    pub fn logp_with_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.dim()];
        let logp = self.logp_and_grad(theta, &mut grad);
        (logp, grad)
    }
}
