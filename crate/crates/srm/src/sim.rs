//! Seeded generative simulator for the binomial social relations model.
//!
//! [`simulate`] draws every latent effect from its exact model distribution,
//! forms the linear predictor cell by cell, and draws binomial outcomes. It
//! returns both the dataset and the true latents so recovery and calibration
//! studies can compare against the generating values.
//!
//! Determinism: all randomness comes from one `ChaCha8` stream seeded with
//! [`SimulationSpec::seed`]. The stream is consumed in a fixed, documented
//! order so identical specs give bit-identical output:
//!
//! 1. one pair of standard normals per node, in node order (sender/receiver
//!    effects via the Cholesky factor of their 2x2 covariance);
//! 2. dyad subset selection when the design drops dyads (Floyd's sampling
//!    algorithm, one uniform integer per kept dyad);
//! 3. one covariate draw per kept dyad, in dyad order (random generators
//!    only; constant/explicit generators consume nothing);
//! 4. one pair of standard normals per kept dyad, in dyad order (dyad
//!    intercept/slope effects);
//! 5. per kept dyad in order, low-to-high direction then high-to-low: an
//!    overdispersion normal (when enabled) followed by the binomial count.

use crate::data::{NetworkDataset, NodeId, RawRow, TransformSpec};
use crate::error::{Result, SrmError};
use crate::model::{inv_logit, FixedEffects, LatentEffects, ModelConfig, VarianceComponents};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, StandardNormal};
use std::collections::HashMap;

/// Trial counts: one shared count, or one count per ordered cell of the
/// complete design (row-major over ordered pairs `(i, j)`, `i != j`, skipping
/// the diagonal; length `N(N-1)`).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrialsSpec {
    Constant { trials: u64 },
    Table { trials: Vec<u64> },
}

/// Dyad covariate generator. `Explicit` supplies one value per unordered pair
/// of the complete design, in lexicographic `(lo, hi)` order (length
/// `N(N-1)/2`); the other generators are drawn from the seed stream. The
/// covariate is generated once per dyad, so symmetry holds by construction.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CovariateGenerator {
    Constant { value: f64 },
    Uniform { lo: f64, hi: f64 },
    Binary { p: f64 },
    Explicit { values: Vec<f64> },
}

/// Which ordered cells are generated.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Design {
    /// Every ordered pair (full round robin).
    Complete,
    /// Drop whole dyads uniformly at random, keeping
    /// `round((1 - fraction) * N(N-1)/2)` of them (both directions of every
    /// kept dyad are generated).
    DyadMissing { fraction: f64 },
}

/// Complete description of one synthetic network draw.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimulationSpec {
    /// Number of nodes, at least 3.
    pub n_nodes: usize,
    pub trials: TrialsSpec,
    pub covariate: CovariateGenerator,
    pub fixed: FixedEffects,
    pub components: VarianceComponents,
    pub model: ModelConfig,
    pub design: Design,
    pub seed: u64,
}

/// Sample moments of the true latent draws, for comparison against the
/// generating components.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MomentReport {
    pub n_nodes: usize,
    pub n_dyads: usize,
    pub n_observations: usize,
    pub var_sender: f64,
    pub var_receiver: f64,
    pub corr_sender_receiver: f64,
    pub var_dyad_intercept: f64,
    pub var_dyad_slope: f64,
    pub corr_dyad: f64,
    /// Sample variance of the overdispersion draws; absent when disabled.
    pub var_overdispersion: Option<f64>,
}

impl SimulationSpec {
    /// Validate ranges and cross-field consistency.
    ///
    /// The simulator accepts boundary values the posterior density cannot
    /// (zero standard deviations, correlations of exactly +/-1): degenerate
    /// distributions are perfectly well defined generatively.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SrmError::InvalidSpec(msg));
        if self.n_nodes < 3 {
            return bad(format!("n_nodes must be at least 3, got {}", self.n_nodes));
        }
        let c = &self.components;
        for (name, value) in [
            ("sigma_a", c.sigma_a),
            ("sigma_b", c.sigma_b),
            ("sigma_u", c.sigma_u),
            ("sigma_v", c.sigma_v),
            ("sigma_d", c.sigma_d),
        ] {
            if !value.is_finite() || value < 0.0 {
                return bad(format!("{name} must be finite and nonnegative, got {value}"));
            }
        }
        for (name, value) in [("rho_ab", c.rho_ab), ("rho_uv", c.rho_uv)] {
            if !value.is_finite() || value.abs() > 1.0 {
                return bad(format!("{name} must lie in [-1, 1], got {value}"));
            }
        }
        if !self.model.overdispersion_enabled && c.sigma_d != 0.0 {
            return bad("sigma_d > 0 requires overdispersion to be enabled".into());
        }
        if !self.fixed.alpha.is_finite() || !self.fixed.beta.is_finite() {
            return bad("alpha and beta must be finite".into());
        }
        let n = self.n_nodes;
        match &self.trials {
            TrialsSpec::Constant { trials } => {
                if *trials == 0 {
                    return bad("trials must be at least 1".into());
                }
            }
            TrialsSpec::Table { trials } => {
                if trials.len() != n * (n - 1) {
                    return bad(format!(
                        "trials table must have one entry per ordered cell ({} for {n} nodes), got {}",
                        n * (n - 1),
                        trials.len()
                    ));
                }
                if trials.iter().any(|&t| t == 0) {
                    return bad("every trials table entry must be at least 1".into());
                }
            }
        }
        match &self.covariate {
            CovariateGenerator::Constant { value } => {
                if !value.is_finite() {
                    return bad("constant covariate must be finite".into());
                }
            }
            CovariateGenerator::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return bad(format!("uniform covariate needs finite lo <= hi, got [{lo}, {hi}]"));
                }
            }
            CovariateGenerator::Binary { p } => {
                if !(0.0..=1.0).contains(p) {
                    return bad(format!("binary covariate probability must lie in [0, 1], got {p}"));
                }
            }
            CovariateGenerator::Explicit { values } => {
                if values.len() != n * (n - 1) / 2 {
                    return bad(format!(
                        "explicit covariate needs one value per dyad ({} for {n} nodes), got {}",
                        n * (n - 1) / 2,
                        values.len()
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("explicit covariate values must be finite".into());
                }
            }
        }
        if let Design::DyadMissing { fraction } = self.design {
            if !(0.0..1.0).contains(&fraction) {
                return bad(format!("missing fraction must lie in [0, 1), got {fraction}"));
            }
            if kept_dyads(n, fraction) == 0 {
                return bad(format!(
                    "missing fraction {fraction} leaves no dyads on a {n}-node network"
                ));
            }
        }
        Ok(())
    }
}

/// Number of dyads kept under a missing fraction: `round((1-f) * N(N-1)/2)`.
fn kept_dyads(n_nodes: usize, fraction: f64) -> usize {
    let total = (n_nodes * (n_nodes - 1) / 2) as f64;
    ((1.0 - fraction) * total).round() as usize
}

/// Rank of the unordered pair `(lo, hi)` in lexicographic order over the
/// complete design on `n` nodes.
fn dyad_rank(lo: usize, hi: usize, n: usize) -> usize {
    lo * (2 * n - lo - 1) / 2 + (hi - lo - 1)
}

/// Rank of the ordered cell `(i, j)` in row-major order skipping the diagonal.
fn cell_rank(i: usize, j: usize, n: usize) -> usize {
    i * (n - 1) + if j < i { j } else { j - 1 }
}

/// Draw one zero-mean bivariate normal pair via the Cholesky factor of
/// `[[s1^2, rho s1 s2], [rho s1 s2, s2^2]]`.
fn bvn_draw(rng: &mut ChaCha8Rng, s1: f64, s2: f64, rho: f64) -> (f64, f64) {
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    let x1 = s1 * z1;
    let x2 = s2 * (rho * z1 + (1.0 - rho * rho).max(0.0).sqrt() * z2);
    (x1, x2)
}

/// Select `k` of `0..n` uniformly without replacement (Floyd's algorithm),
/// returned in ascending order.
fn sample_indices(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut selected = std::collections::BTreeSet::new();
    for j in (n - k)..n {
        let t = rng.random_range(0..=j);
        if !selected.insert(t) {
            selected.insert(j);
        }
    }
    selected.into_iter().collect()
}

/// Generate one dataset and its true latent effects from the exact model:
/// bivariate normal node and dyad effects, optional normal overdispersion,
/// binomial outcomes through the inverse-logit link. Bit-identical output for
/// identical specs.
pub fn simulate(spec: &SimulationSpec) -> Result<(NetworkDataset, LatentEffects)> {
    spec.validate()?;
    let n = spec.n_nodes;
    let c = &spec.components;
    let od = spec.model.overdispersion_enabled;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // 1. Node effects.
    let mut sender = Vec::with_capacity(n);
    let mut receiver = Vec::with_capacity(n);
    for _ in 0..n {
        let (a, b) = bvn_draw(&mut rng, c.sigma_a, c.sigma_b, c.rho_ab);
        sender.push(a);
        receiver.push(b);
    }

    // 2. Dyad roster (ascending (lo, hi) order matches the canonical dataset
    // dyad order because generated labels sort like node indices).
    let total_dyads = n * (n - 1) / 2;
    let kept: Vec<usize> = match spec.design {
        Design::Complete => (0..total_dyads).collect(),
        Design::DyadMissing { fraction } => {
            let k = kept_dyads(n, fraction);
            sample_indices(&mut rng, total_dyads, k)
        }
    };
    let mut pairs = Vec::with_capacity(kept.len());
    {
        let mut rank_iter = kept.iter().copied().peekable();
        let mut rank = 0usize;
        'outer: for lo in 0..n {
            for hi in (lo + 1)..n {
                match rank_iter.peek() {
                    Some(&next) if next == rank => {
                        pairs.push((lo, hi));
                        rank_iter.next();
                    }
                    Some(_) => {}
                    None => break 'outer,
                }
                rank += 1;
            }
        }
        debug_assert_eq!(pairs.len(), kept.len());
    }

    // 3. Covariates, one per kept dyad.
    let covariates: Vec<f64> = match &spec.covariate {
        CovariateGenerator::Constant { value } => vec![*value; pairs.len()],
        CovariateGenerator::Uniform { lo, hi } => pairs
            .iter()
            .map(|_| lo + (hi - lo) * rng.random::<f64>())
            .collect(),
        CovariateGenerator::Binary { p } => pairs
            .iter()
            .map(|_| if rng.random::<f64>() < *p { 1.0 } else { 0.0 })
            .collect(),
        CovariateGenerator::Explicit { values } => pairs
            .iter()
            .map(|&(lo, hi)| values[dyad_rank(lo, hi, n)])
            .collect(),
    };

    // 4. Dyad effects.
    let mut dyad_intercept = Vec::with_capacity(pairs.len());
    let mut dyad_slope = Vec::with_capacity(pairs.len());
    for _ in &pairs {
        let (u, v) = bvn_draw(&mut rng, c.sigma_u, c.sigma_v, c.rho_uv);
        dyad_intercept.push(u);
        dyad_slope.push(v);
    }

    // 5. Directed cells: overdispersion draw then binomial count, low-to-high
    // direction first.
    let width = (n - 1).to_string().len();
    let labels: Vec<String> = (0..n).map(|i| format!("n{i:0width$}")).collect();
    let trials_of = |i: usize, j: usize| -> u64 {
        match &spec.trials {
            TrialsSpec::Constant { trials } => *trials,
            TrialsSpec::Table { trials } => trials[cell_rank(i, j, n)],
        }
    };
    let mut rows = Vec::with_capacity(2 * pairs.len());
    let mut d_of_cell: HashMap<(usize, usize), f64> = HashMap::new();
    for (k, &(lo, hi)) in pairs.iter().enumerate() {
        let x = covariates[k];
        for (ego, alter) in [(lo, hi), (hi, lo)] {
            let d: f64 = if od {
                c.sigma_d * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            let eta = spec.fixed.alpha
                + sender[ego]
                + receiver[alter]
                + spec.fixed.beta * x
                + dyad_intercept[k]
                + dyad_slope[k] * x
                + d;
            let trials = trials_of(ego, alter);
            let y = Binomial::new(trials, inv_logit(eta))
                .expect("probability is always in [0, 1]")
                .sample(&mut rng);
            if od {
                d_of_cell.insert((ego, alter), d);
            }
            rows.push(RawRow {
                line: rows.len() + 2,
                ego: labels[ego].clone(),
                alter: labels[alter].clone(),
                successes: y,
                trials,
                covariate: x,
            });
        }
    }

    let dataset = NetworkDataset::from_raw_rows(rows, TransformSpec::None, 0.0)?;

    // The returned latents align with the dataset. Generated labels sort like
    // generation indices, but under heavy missingness a node can land in no
    // kept dyad and then carries no observations at all, so map each dataset
    // node back to its generation index explicitly and drop the rest.
    let label_to_gen: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, label)| (label.as_str(), i))
        .collect();
    let gen_index: Vec<usize> = (0..dataset.n_nodes())
        .map(|k| label_to_gen[dataset.node_label(NodeId(k))])
        .collect();
    let overdispersion = if od {
        dataset
            .observations()
            .iter()
            .map(|o| d_of_cell[&(gen_index[o.ego.0], gen_index[o.alter.0])])
            .collect()
    } else {
        Vec::new()
    };
    let latents = LatentEffects {
        sender: gen_index.iter().map(|&g| sender[g]).collect(),
        receiver: gen_index.iter().map(|&g| receiver[g]).collect(),
        dyad_intercept,
        dyad_slope,
        overdispersion,
    };
    Ok((dataset, latents))
}

fn sample_var(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

fn sample_corr(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0f64, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Sample variances and correlations of simulated latent draws.
pub fn empirical_moments(dataset: &NetworkDataset, latents: &LatentEffects) -> MomentReport {
    MomentReport {
        n_nodes: dataset.n_nodes(),
        n_dyads: dataset.n_dyads(),
        n_observations: dataset.n_observations(),
        var_sender: sample_var(&latents.sender),
        var_receiver: sample_var(&latents.receiver),
        corr_sender_receiver: sample_corr(&latents.sender, &latents.receiver),
        var_dyad_intercept: sample_var(&latents.dyad_intercept),
        var_dyad_slope: sample_var(&latents.dyad_slope),
        corr_dyad: sample_corr(&latents.dyad_intercept, &latents.dyad_slope),
        var_overdispersion: if latents.overdispersion.is_empty() {
            None
        } else {
            Some(sample_var(&latents.overdispersion))
        },
    }
}
