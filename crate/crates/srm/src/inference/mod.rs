//! Posterior sampling and convergence diagnostics.
//!
//! [`fit`] runs several independent no-U-turn chains over the unconstrained
//! posterior of a dataset, adapts step size and a diagonal mass matrix during
//! warmup only, and returns constrained-scale draws together with split R-hat
//! and effective-sample-size diagnostics. Runs are deterministic given the
//! seed: chain `c` uses stream `c` of a `ChaCha8` generator seeded with the
//! configured seed, so results do not depend on thread count.

mod diagnostics;
mod nuts;

pub use diagnostics::{
    effective_sample_size, split_rhat, summarize_parameter, summary_table, ParameterSummary,
};
pub(crate) use diagnostics::quantile_sorted;

use crate::data::NetworkDataset;
use crate::error::{Result, SrmError};
use crate::model::{ModelConfig, Posterior};
use ndarray::Array3;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Chain/iteration counts and adaptation settings.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SamplerConfig {
    /// Number of independent chains (default 4).
    pub chains: usize,
    /// Warmup (adaptation) iterations per chain, discarded (default 1000).
    pub warmup: usize,
    /// Retained sampling iterations per chain (default 1000).
    pub sampling: usize,
    /// Seed of the per-chain RNG streams.
    pub seed: u64,
    /// Dual-averaging target acceptance statistic, in (0, 1) (default 0.8).
    pub target_accept: f64,
    /// Trajectory doubling cap per transition (default 10).
    pub max_treedepth: usize,
    /// Half-width of the per-chain uniform jitter applied to the initial
    /// point in unconstrained space (default 0.1).
    pub init_jitter: f64,
    /// Latent-effect retention: 0 drops latent draws, k keeps every k-th
    /// sampling iteration. Population parameters are always kept in full.
    pub latent_thin: usize,
    /// Concurrent chain limit; 0 means use the available parallelism.
    pub threads: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 4,
            warmup: 1000,
            sampling: 1000,
            seed: 0,
            target_accept: 0.8,
            max_treedepth: 10,
            init_jitter: 0.1,
            latent_thin: 0,
            threads: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SrmError::InvalidConfig(msg));
        if self.chains < 1 {
            return bad("chains must be at least 1".into());
        }
        if self.sampling < 1 {
            return bad("sampling iterations must be at least 1".into());
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return bad(format!(
                "target acceptance must lie in (0, 1), got {}",
                self.target_accept
            ));
        }
        if self.max_treedepth < 1 || self.max_treedepth > 15 {
            return bad("max tree depth must lie in 1..=15".into());
        }
        if !(self.init_jitter >= 0.0 && self.init_jitter.is_finite()) {
            return bad("init jitter must be finite and nonnegative".into());
        }
        Ok(())
    }
}

/// Constrained-scale posterior draws.
///
/// Population parameters are stored as `[chain, iteration, parameter]`;
/// latent effects, when retained, live in a separate (possibly thinned) block
/// with their own names.
#[derive(Debug, Clone)]
pub struct PosteriorSamples {
    names: Vec<String>,
    draws: Array3<f64>,
    latent_names: Vec<String>,
    latent_draws: Option<Array3<f64>>,
    latent_thin: usize,
    fingerprint: String,
    config: SamplerConfig,
    model: ModelConfig,
}

impl PosteriorSamples {
    /// Assemble samples from raw parts, enforcing the container invariants:
    /// finite draws, positive sds, correlations strictly inside (-1, 1).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        names: Vec<String>,
        draws: Array3<f64>,
        latent_names: Vec<String>,
        latent_draws: Option<Array3<f64>>,
        latent_thin: usize,
        fingerprint: String,
        config: SamplerConfig,
        model: ModelConfig,
    ) -> Result<Self> {
        if names.len() != draws.dim().2 {
            return Err(SrmError::DimensionMismatch(format!(
                "parameter names: got {}, want {}",
                names.len(),
                draws.dim().2
            )));
        }
        if draws.iter().any(|x| !x.is_finite()) {
            return Err(SrmError::InvalidInput(
                "posterior draws must be finite".into(),
            ));
        }
        for (k, name) in names.iter().enumerate() {
            let column = draws.slice(ndarray::s![.., .., k]);
            if name.starts_with("sigma_") && column.iter().any(|&x| x <= 0.0) {
                return Err(SrmError::InvalidInput(format!(
                    "{name} draws must be positive"
                )));
            }
            if name.starts_with("rho_") && column.iter().any(|&x| x.abs() >= 1.0) {
                return Err(SrmError::InvalidInput(format!(
                    "{name} draws must lie strictly inside (-1, 1)"
                )));
            }
        }
        Ok(PosteriorSamples {
            names,
            draws,
            latent_names,
            latent_draws,
            latent_thin,
            fingerprint,
            config,
            model,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn latent_names(&self) -> &[String] {
        &self.latent_names
    }

    pub fn n_chains(&self) -> usize {
        self.draws.dim().0
    }

    /// Retained iterations per chain.
    pub fn n_iterations(&self) -> usize {
        self.draws.dim().1
    }

    pub fn draws(&self) -> &Array3<f64> {
        &self.draws
    }

    pub fn latent_draws(&self) -> Option<&Array3<f64>> {
        self.latent_draws.as_ref()
    }

    pub fn latent_thin(&self) -> usize {
        self.latent_thin
    }

    /// SHA-256 fingerprint of the dataset the samples were drawn against.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn model(&self) -> &ModelConfig {
        &self.model
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Per-chain draws of one population parameter.
    pub fn parameter_chains(&self, name: &str) -> Option<Vec<Vec<f64>>> {
        let k = self.index_of(name)?;
        Some(
            (0..self.n_chains())
                .map(|c| self.draws.slice(ndarray::s![c, .., k]).to_vec())
                .collect(),
        )
    }

    /// All draws of one population parameter, chains concatenated in order.
    pub fn flat_parameter(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.index_of(name)?;
        let mut out = Vec::with_capacity(self.n_chains() * self.n_iterations());
        for c in 0..self.n_chains() {
            out.extend(self.draws.slice(ndarray::s![c, .., k]).iter());
        }
        Some(out)
    }
}

/// Per-parameter convergence measures.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ParamDiagnostic {
    pub name: String,
    pub rhat: f64,
    pub ess: f64,
}

/// Sampler health report: per-parameter split R-hat and effective sample
/// size over the population parameters, per-chain counters, and any
/// identifiability or stability warnings raised during the run.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ChainDiagnostics {
    pub parameters: Vec<ParamDiagnostic>,
    /// Post-warmup divergent transitions per chain.
    pub divergences: Vec<usize>,
    /// Divergent transitions during warmup per chain (informational).
    pub warmup_divergences: Vec<usize>,
    /// Post-warmup iterations that hit the trajectory depth cap, per chain.
    pub max_depth_hits: Vec<usize>,
    /// Mean post-warmup acceptance statistic per chain.
    pub mean_accept: Vec<f64>,
    /// Adapted step size per chain.
    pub step_sizes: Vec<f64>,
    pub warnings: Vec<String>,
}

impl ChainDiagnostics {
    /// Largest population R-hat; NaN if any parameter's R-hat is degenerate.
    pub fn max_rhat(&self) -> f64 {
        let mut max = 1.0f64;
        for p in &self.parameters {
            if p.rhat.is_nan() {
                return f64::NAN;
            }
            max = max.max(p.rhat);
        }
        max
    }

    pub fn min_ess(&self) -> f64 {
        self.parameters
            .iter()
            .map(|p| p.ess)
            .fold(f64::INFINITY, f64::min)
    }

    /// True only when every population R-hat is finite and below `threshold`.
    pub fn all_converged(&self, threshold: f64) -> bool {
        !self.parameters.is_empty()
            && self
                .parameters
                .iter()
                .all(|p| p.rhat.is_finite() && p.rhat < threshold)
    }

    /// Fraction of post-warmup transitions that diverged.
    pub fn divergence_rate(&self, sampling: usize) -> f64 {
        let total: usize = self.divergences.iter().sum();
        total as f64 / (self.divergences.len() * sampling).max(1) as f64
    }
}

/// Deterministic initial point in unconstrained space: `alpha` at the pooled
/// empirical logit clamped to [-4, 4], `beta` and all latents at 0, standard
/// deviations at 0.5, correlations at 0, plus one `Uniform(-jitter, jitter)`
/// perturbation per coordinate. Re-jitters up to 100 times if the target is
/// non-finite at the proposed point.
pub fn initialize(posterior: &Posterior, jitter: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let dataset = posterior.dataset();
    let (mut successes, mut trials) = (0u64, 0u64);
    for obs in dataset.observations() {
        successes += obs.successes;
        trials += obs.trials;
    }
    let rate = successes as f64 / trials as f64;
    let alpha = (rate / (1.0 - rate)).ln().clamp(-4.0, 4.0);
    let alpha = if alpha.is_nan() { 0.0 } else { alpha };

    let mut base = vec![0.0; posterior.dim()];
    base[0] = alpha;
    let half = 0.5f64.ln();
    base[2] = half;
    base[3] = half;
    base[5] = half;
    base[6] = half;
    if posterior.config().overdispersion_enabled {
        base[8] = half;
    }

    let mut grad = vec![0.0; posterior.dim()];
    for _attempt in 0..100 {
        let theta: Vec<f64> = base
            .iter()
            .map(|b| b + rng.random_range(-jitter..=jitter))
            .collect();
        if posterior.logp_and_grad(&theta, &mut grad).is_finite() {
            return Ok(theta);
        }
    }
    Err(SrmError::BadInitialization(100))
}

/// Draw posterior samples for every unknown of the model on `dataset`.
///
/// Chains run independently (in parallel up to `config.threads`) and the
/// result is identical for any thread count. Identifiability caveats —
/// fewer than two nodes observed in both roles, or no dyad observed in both
/// directions — surface as warnings in the diagnostics, not errors.
pub fn fit(
    dataset: &NetworkDataset,
    model: ModelConfig,
    config: &SamplerConfig,
) -> Result<(PosteriorSamples, ChainDiagnostics)> {
    config.validate()?;
    let mut warnings = Vec::new();

    let n = dataset.n_nodes();
    let mut seen_as_ego = vec![false; n];
    let mut seen_as_alter = vec![false; n];
    let mut dyad_directions = vec![0u8; dataset.n_dyads()];
    for (m, obs) in dataset.observations().iter().enumerate() {
        seen_as_ego[obs.ego.0] = true;
        seen_as_alter[obs.alter.0] = true;
        dyad_directions[dataset.obs_dyad(m).0] += 1;
    }
    let both_roles = (0..n).filter(|&i| seen_as_ego[i] && seen_as_alter[i]).count();
    if both_roles < 2 {
        warnings.push(format!(
            "only {both_roles} node(s) observed as both sender and receiver; \
             sender/receiver variances are weakly identified"
        ));
    }
    if !dyad_directions.iter().any(|&c| c == 2) {
        warnings.push(
            "no dyad observed in both directions; the dyad variance is \
             confounded with overdispersion"
                .to_string(),
        );
    }

    let posterior = Posterior::new(dataset, model);
    let opts = nuts::NutsOptions {
        warmup: config.warmup,
        sampling: config.sampling,
        target_accept: config.target_accept,
        max_treedepth: config.max_treedepth,
    };

    let threads = if config.threads == 0 {
        std::thread::available_parallelism().map(|t| t.get()).unwrap_or(1)
    } else {
        config.threads
    };
    let run_one = |chain: usize| -> Result<nuts::ChainOutput> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(chain as u64);
        let theta0 = initialize(&posterior, config.init_jitter, &mut rng)?;
        Ok(nuts::run_chain(&posterior, theta0, &mut rng, &opts))
    };
    let mut outputs: Vec<Result<nuts::ChainOutput>> = Vec::with_capacity(config.chains);
    if threads <= 1 || config.chains == 1 {
        for chain in 0..config.chains {
            outputs.push(run_one(chain));
        }
    } else {
        let ids: Vec<usize> = (0..config.chains).collect();
        for group in ids.chunks(threads) {
            let mut batch: Vec<Result<nuts::ChainOutput>> = std::thread::scope(|scope| {
                let handles: Vec<_> = group
                    .iter()
                    .map(|&chain| scope.spawn(move || run_one(chain)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("chain thread panicked"))
                    .collect()
            });
            outputs.append(&mut batch);
        }
    }
    let chains: Vec<nuts::ChainOutput> = outputs.into_iter().collect::<Result<_>>()?;

    // Assemble constrained draws.
    let n_pop = posterior.n_pop();
    let names: Vec<String> = posterior.pop_names().iter().map(|s| s.to_string()).collect();
    let latent_names = posterior.latent_names();
    let n_latent = latent_names.len();
    let kept_latent: Vec<usize> = if config.latent_thin > 0 {
        (0..config.sampling).step_by(config.latent_thin).collect()
    } else {
        Vec::new()
    };

    let mut draws = Array3::zeros((config.chains, config.sampling, n_pop));
    let mut latent_draws = if kept_latent.is_empty() {
        None
    } else {
        Some(Array3::zeros((config.chains, kept_latent.len(), n_latent)))
    };
    for (c, chain) in chains.iter().enumerate() {
        let mut kept_iter = 0usize;
        for (i, theta) in chain.draws.iter().enumerate() {
            let constrained = posterior.constrain(theta);
            for k in 0..n_pop {
                draws[[c, i, k]] = constrained[k];
            }
            if let Some(latents) = latent_draws.as_mut() {
                if kept_latent.get(kept_iter) == Some(&i) {
                    for k in 0..n_latent {
                        latents[[c, kept_iter, k]] = constrained[n_pop + k];
                    }
                    kept_iter += 1;
                }
            }
        }
    }

    // Per-parameter diagnostics over the population block.
    let mut parameters = Vec::with_capacity(n_pop);
    for (k, name) in names.iter().enumerate() {
        let per_chain: Vec<Vec<f64>> = (0..config.chains)
            .map(|c| draws.slice(ndarray::s![c, .., k]).to_vec())
            .collect();
        parameters.push(ParamDiagnostic {
            name: name.clone(),
            rhat: split_rhat(&per_chain).unwrap_or(f64::NAN),
            ess: effective_sample_size(&per_chain).unwrap_or(f64::NAN),
        });
    }

    let divergences: Vec<usize> = chains.iter().map(|c| c.divergences).collect();
    let total_div: usize = divergences.iter().sum();
    let rate = total_div as f64 / (config.chains * config.sampling) as f64;
    if rate > 0.01 {
        warnings.push(format!(
            "{:.1}% of post-warmup transitions diverged ({} of {}); posterior \
             geometry is poorly resolved and estimates may be biased — consider \
             a higher target acceptance",
            100.0 * rate,
            total_div,
            config.chains * config.sampling
        ));
    }

    let diagnostics = ChainDiagnostics {
        parameters,
        divergences,
        warmup_divergences: chains.iter().map(|c| c.warmup_divergences).collect(),
        max_depth_hits: chains.iter().map(|c| c.max_depth_hits).collect(),
        mean_accept: chains.iter().map(|c| c.mean_accept).collect(),
        step_sizes: chains.iter().map(|c| c.step_size).collect(),
        warnings,
    };
    let samples = PosteriorSamples::from_parts(
        names,
        draws,
        latent_names,
        latent_draws,
        config.latent_thin,
        dataset.fingerprint(),
        config.clone(),
        model,
    )?;
    Ok((samples, diagnostics))
}

/// Mean, sd, quantiles, R-hat, and ESS for every population parameter.
pub fn posterior_summary(samples: &PosteriorSamples) -> Vec<ParameterSummary> {
    samples
        .names()
        .iter()
        .map(|name| {
            let chains = samples
                .parameter_chains(name)
                .expect("summary over own names");
            summarize_parameter(name, &chains)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FixedEffects, VarianceComponents};
    use crate::sim::{simulate, CovariateGenerator, Design, SimulationSpec, TrialsSpec};
    use approx::assert_abs_diff_eq;

    fn tiny_dataset() -> NetworkDataset {
        NetworkDataset::from_rows(&[
            ("a", "b", 3, 10, 0.5),
            ("b", "a", 6, 10, 0.5),
            ("a", "c", 2, 10, -0.5),
            ("c", "a", 5, 10, -0.5),
            ("b", "c", 4, 10, 1.0),
            ("c", "b", 7, 10, 1.0),
            ("a", "d", 1, 10, 0.0),
            ("d", "a", 8, 10, 0.0),
        ])
        .unwrap()
    }

    fn quick_config() -> SamplerConfig {
        SamplerConfig {
            chains: 2,
            warmup: 40,
            sampling: 30,
            seed: 7,
            latent_thin: 0,
            threads: 1,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn initialize_uses_pooled_logit() {
        let ds = NetworkDataset::from_rows(&[
            ("a", "b", 5, 10, 0.0),
            ("b", "a", 5, 10, 0.0),
        ])
        .unwrap();
        let post = Posterior::new(&ds, ModelConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let theta = initialize(&post, 0.0, &mut rng).unwrap();
        assert_eq!(theta[0], 0.0, "pooled rate 1/2 puts alpha at 0");
        assert_eq!(theta[1], 0.0);
        assert_abs_diff_eq!(theta[2], 0.5f64.ln(), epsilon = 1e-15);
        assert!(theta[9..].iter().all(|&z| z == 0.0));
    }

    #[test]
    fn initialize_clamps_saturated_rates() {
        let all = NetworkDataset::from_rows(&[
            ("a", "b", 10, 10, 0.0),
            ("b", "a", 10, 10, 0.0),
        ])
        .unwrap();
        let post = Posterior::new(&all, ModelConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(initialize(&post, 0.0, &mut rng).unwrap()[0], 4.0);

        let none = NetworkDataset::from_rows(&[
            ("a", "b", 0, 10, 0.0),
            ("b", "a", 0, 10, 0.0),
        ])
        .unwrap();
        let post = Posterior::new(&none, ModelConfig::default());
        assert_eq!(initialize(&post, 0.0, &mut rng).unwrap()[0], -4.0);
    }

    #[test]
    fn initialize_jitter_stays_within_bound() {
        let ds = tiny_dataset();
        let post = Posterior::new(&ds, ModelConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = initialize(&post, 0.0, &mut rng).unwrap();
        for _ in 0..5 {
            let jittered = initialize(&post, 0.1, &mut rng).unwrap();
            for (b, j) in base.iter().zip(&jittered) {
                assert!((b - j).abs() <= 0.1 + 1e-12);
            }
        }
    }

    #[test]
    fn fit_shapes_and_determinism() {
        let ds = tiny_dataset();
        let config = quick_config();
        let (s1, d1) = fit(&ds, ModelConfig::default(), &config).unwrap();
        assert_eq!(s1.n_chains(), 2);
        assert_eq!(s1.n_iterations(), 30);
        assert_eq!(s1.names().len(), 9);
        assert!(s1.latent_draws().is_none());
        assert_eq!(d1.parameters.len(), 9);
        assert_eq!(d1.divergences.len(), 2);

        let (s2, d2) = fit(&ds, ModelConfig::default(), &config).unwrap();
        assert_eq!(s1.draws(), s2.draws(), "same seed, same draws");
        assert_eq!(d1.step_sizes, d2.step_sizes);

        let other = SamplerConfig { seed: 8, ..config };
        let (s3, _) = fit(&ds, ModelConfig::default(), &other).unwrap();
        assert_ne!(s1.draws(), s3.draws());
    }

    #[test]
    fn fit_thread_count_does_not_change_draws() {
        let ds = tiny_dataset();
        let sequential = quick_config();
        let parallel = SamplerConfig { threads: 2, ..sequential.clone() };
        let (s1, _) = fit(&ds, ModelConfig::default(), &sequential).unwrap();
        let (s2, _) = fit(&ds, ModelConfig::default(), &parallel).unwrap();
        assert_eq!(s1.draws(), s2.draws());
    }

    #[test]
    fn fit_retained_draws_have_finite_target_and_valid_ranges() {
        let ds = tiny_dataset();
        let config = quick_config();
        let (samples, _) = fit(&ds, ModelConfig::default(), &config).unwrap();
        for name in ["sigma_a", "sigma_b", "sigma_u", "sigma_v", "sigma_d"] {
            assert!(samples.flat_parameter(name).unwrap().iter().all(|&s| s > 0.0));
        }
        for name in ["rho_ab", "rho_uv"] {
            assert!(samples.flat_parameter(name).unwrap().iter().all(|&r| r.abs() < 1.0));
        }
    }

    #[test]
    fn fit_without_overdispersion_drops_sigma_d() {
        let ds = tiny_dataset();
        let config = quick_config();
        let model = ModelConfig { overdispersion_enabled: false };
        let (samples, diag) = fit(&ds, model, &config).unwrap();
        assert_eq!(samples.names().len(), 8);
        assert!(samples.flat_parameter("sigma_d").is_none());
        assert!(diag.parameters.iter().all(|p| p.name != "sigma_d"));
    }

    #[test]
    fn fit_latent_thinning_shapes() {
        let ds = tiny_dataset();
        let config = SamplerConfig { latent_thin: 7, ..quick_config() };
        let (samples, _) = fit(&ds, ModelConfig::default(), &config).unwrap();
        let latents = samples.latent_draws().unwrap();
        // 30 sampling iterations, every 7th kept starting at 0: 0,7,14,21,28.
        assert_eq!(latents.dim(), (2, 5, samples.latent_names().len()));
        let expected_latents = 2 * ds.n_nodes() + 2 * ds.n_dyads() + ds.n_observations();
        assert_eq!(samples.latent_names().len(), expected_latents);
    }

    #[test]
    fn fit_warns_on_one_directional_data() {
        let ds = NetworkDataset::from_rows(&[
            ("a", "b", 3, 10, 0.0),
            ("a", "c", 4, 10, 0.0),
            ("b", "c", 5, 10, 0.0),
        ])
        .unwrap();
        let (_, diag) = fit(&ds, ModelConfig::default(), &quick_config()).unwrap();
        assert!(diag
            .warnings
            .iter()
            .any(|w| w.contains("no dyad observed in both directions")));
        assert!(diag
            .warnings
            .iter()
            .any(|w| w.contains("weakly identified")),
            "one node in both roles should trip the role warning: {:?}", diag.warnings);
    }

    #[test]
    fn zero_variance_truth_contracts_sd_posteriors() {
        // All network effects off: each sd posterior should sit well below
        // the half-Normal(0,2) prior median.
        let spec = SimulationSpec {
            n_nodes: 12,
            trials: TrialsSpec::Constant { trials: 30 },
            covariate: CovariateGenerator::Uniform { lo: -1.0, hi: 1.0 },
            fixed: FixedEffects { alpha: 0.3, beta: 0.0 },
            components: VarianceComponents {
                sigma_a: 0.0, sigma_b: 0.0, rho_ab: 0.0,
                sigma_u: 0.0, sigma_v: 0.0, rho_uv: 0.0,
                sigma_d: 0.0,
            },
            model: ModelConfig { overdispersion_enabled: false },
            design: Design::Complete,
            seed: 31,
        };
        let (ds, _) = simulate(&spec).unwrap();
        let config = SamplerConfig {
            chains: 2,
            warmup: 250,
            sampling: 250,
            seed: 5,
            threads: 1,
            ..SamplerConfig::default()
        };
        let model = ModelConfig { overdispersion_enabled: false };
        let (samples, _) = fit(&ds, model, &config).unwrap();
        let prior_median = 2.0 * 0.674_489_750_196_081_7;
        for name in ["sigma_a", "sigma_b", "sigma_u", "sigma_v"] {
            let mut xs = samples.flat_parameter(name).unwrap();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = xs[xs.len() / 2];
            assert!(
                median < prior_median,
                "{name} posterior median {median} should contract below prior median {prior_median}"
            );
        }
    }

    #[test]
    fn posterior_summary_has_all_population_rows() {
        let ds = tiny_dataset();
        let (samples, _) = fit(&ds, ModelConfig::default(), &quick_config()).unwrap();
        let summary = posterior_summary(&samples);
        assert_eq!(summary.len(), 9);
        assert!(summary.iter().all(|s| s.mean.is_finite() && s.sd >= 0.0));
        let names: Vec<&str> = summary.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(
            names,
            ["alpha", "beta", "sigma_a", "sigma_b", "rho_ab", "sigma_u", "sigma_v", "rho_uv", "sigma_d"]
        );
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            SamplerConfig { chains: 0, ..SamplerConfig::default() },
            SamplerConfig { sampling: 0, ..SamplerConfig::default() },
            SamplerConfig { target_accept: 1.0, ..SamplerConfig::default() },
            SamplerConfig { target_accept: 0.0, ..SamplerConfig::default() },
            SamplerConfig { max_treedepth: 0, ..SamplerConfig::default() },
        ];
        for config in bad {
            assert!(config.validate().is_err());
        }
    }
}
