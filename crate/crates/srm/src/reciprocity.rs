//! Covariate-dependent dyadic reciprocity.
//!
//! The relationship-level disturbance for an unordered pair with covariate
//! `x` is `u + v x`, whose variance is the quadratic
//!
//! ```text
//! q(x) = sigma_u^2 + 2 rho_uv sigma_u sigma_v x + sigma_v^2 x^2
//! ```
//!
//! Both directions of a dyad share that disturbance, while overdispersion
//! and the logistic residual are direction-specific, so the within-dyad
//! correlation of the latent linear predictors is
//!
//! ```text
//! rho(x) = q(x) / (q(x) + sigma_d^2 + pi^2/3)
//! ```
//!
//! [`dyadic_variance`] and [`dyadic_reciprocity`] evaluate those formulas for
//! scalar parameter values; [`reciprocity_curve`] pushes an entire posterior
//! through them, evaluating the curve draw by draw and summarizing afterwards
//! so the returned bands are genuine posterior quantiles of `rho(x)` rather
//! than the curve at summarized parameters.

use crate::error::{Result, SrmError};
use crate::inference::{summarize_parameter, ParameterSummary, PosteriorSamples};
use crate::LATENT_RESIDUAL_VARIANCE;

/// Variance `q(x)` of the relationship disturbance `u + v x`.
///
/// Clamped at zero: for `|rho_uv| <= 1` the quadratic is nonnegative by
/// construction, and the clamp only absorbs the last-ulp rounding that can
/// occur near its root.
pub fn dyadic_variance(sigma_u: f64, sigma_v: f64, rho_uv: f64, x: f64) -> f64 {
    let q = sigma_u * sigma_u
        + 2.0 * rho_uv * sigma_u * sigma_v * x
        + sigma_v * sigma_v * x * x;
    q.max(0.0)
}

/// Within-dyad correlation `rho(x)` of the two directed latent predictors.
///
/// `sigma_d` is the overdispersion scale; pass 0 when the model omits that
/// term. The result lies in `[0, 1)` for any finite inputs with
/// `|rho_uv| <= 1` because the denominator exceeds the numerator by at least
/// `pi^2/3`.
pub fn dyadic_reciprocity(sigma_u: f64, sigma_v: f64, rho_uv: f64, sigma_d: f64, x: f64) -> f64 {
    let q = dyadic_variance(sigma_u, sigma_v, rho_uv, x);
    q / (q + sigma_d * sigma_d + LATENT_RESIDUAL_VARIANCE)
}

/// Posterior summary of the generalized (sender-receiver) reciprocity
/// correlation `rho_ab`.
pub fn generalized_reciprocity(samples: &PosteriorSamples) -> Result<ParameterSummary> {
    let chains = samples
        .parameter_chains("rho_ab")
        .ok_or_else(|| SrmError::MissingParameter("rho_ab".into()))?;
    Ok(summarize_parameter("rho_ab", &chains))
}

/// The posterior columns that drive the reciprocity curve.
///
/// Draws are flattened across chains; `sigma_d` is `None` when the model was
/// fitted without overdispersion, in which case the denominator of `rho(x)`
/// reduces to `q(x) + pi^2/3`.
#[derive(Debug, Clone)]
pub struct ComponentDraws {
    sigma_u: Vec<f64>,
    sigma_v: Vec<f64>,
    rho_uv: Vec<f64>,
    sigma_d: Option<Vec<f64>>,
}

impl ComponentDraws {
    pub fn new(
        sigma_u: Vec<f64>,
        sigma_v: Vec<f64>,
        rho_uv: Vec<f64>,
        sigma_d: Option<Vec<f64>>,
    ) -> Result<Self> {
        let draws = ComponentDraws { sigma_u, sigma_v, rho_uv, sigma_d };
        draws.validate()?;
        Ok(draws)
    }

    /// Pull the variance-component columns out of fitted samples.
    pub fn from_samples(samples: &PosteriorSamples) -> Result<Self> {
        let column = |name: &str| {
            samples
                .flat_parameter(name)
                .ok_or_else(|| SrmError::MissingParameter(name.into()))
        };
        ComponentDraws::new(
            column("sigma_u")?,
            column("sigma_v")?,
            column("rho_uv")?,
            samples.flat_parameter("sigma_d"),
        )
    }

    /// Rebuild component draws from named columns, e.g. a posterior table
    /// read back from disk. Column order is free and extra columns are
    /// ignored; `sigma_d` is optional, every other component is required.
    pub fn from_columns(names: &[String], rows: &[Vec<f64>]) -> Result<Self> {
        let column = |name: &str| -> Result<Vec<f64>> {
            let k = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| SrmError::MissingParameter(name.into()))?;
            rows.iter()
                .map(|row| {
                    row.get(k).copied().ok_or_else(|| {
                        SrmError::InvalidInput(format!(
                            "row with {} values is too short for column {name}",
                            row.len()
                        ))
                    })
                })
                .collect()
        };
        let sigma_d = if names.iter().any(|n| n == "sigma_d") {
            Some(column("sigma_d")?)
        } else {
            None
        };
        ComponentDraws::new(column("sigma_u")?, column("sigma_v")?, column("rho_uv")?, sigma_d)
    }

    fn validate(&self) -> Result<()> {
        let n = self.sigma_u.len();
        if n == 0 {
            return Err(SrmError::InvalidInput(
                "reciprocity needs at least one posterior draw".into(),
            ));
        }
        let lengths_match = self.sigma_v.len() == n
            && self.rho_uv.len() == n
            && self.sigma_d.as_ref().map_or(true, |d| d.len() == n);
        if !lengths_match {
            return Err(SrmError::DimensionMismatch(format!(
                "component draw columns must all have {n} rows"
            )));
        }
        let sds_ok = self
            .sigma_u
            .iter()
            .chain(&self.sigma_v)
            .chain(self.sigma_d.iter().flatten())
            .all(|s| s.is_finite() && *s >= 0.0);
        if !sds_ok {
            return Err(SrmError::InvalidInput(
                "scale draws must be finite and nonnegative".into(),
            ));
        }
        if !self.rho_uv.iter().all(|r| r.is_finite() && r.abs() <= 1.0) {
            return Err(SrmError::InvalidInput(
                "rho_uv draws must lie in [-1, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sigma_u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_u.is_empty()
    }

    fn sigma_d_at(&self, i: usize) -> f64 {
        self.sigma_d.as_ref().map_or(0.0, |d| d[i])
    }
}

/// Pointwise posterior summaries of `rho(x)` and `q(x)` over a covariate
/// grid. Each row summarizes the distribution induced by pushing every
/// posterior draw through the formulas at that grid point.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ReciprocityCurve {
    pub grid: Vec<f64>,
    pub rho_mean: Vec<f64>,
    pub rho_median: Vec<f64>,
    pub rho_q05: Vec<f64>,
    pub rho_q95: Vec<f64>,
    pub dyad_var_mean: Vec<f64>,
    pub dyad_var_median: Vec<f64>,
    pub dyad_var_q05: Vec<f64>,
    pub dyad_var_q95: Vec<f64>,
}

impl ReciprocityCurve {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Render the curve as CSV, one row per grid point.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(
            "x,rho_mean,rho_median,rho_q05,rho_q95,dyad_var_mean,dyad_var_q05,dyad_var_q95\n",
        );
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.grid[i],
                self.rho_mean[i],
                self.rho_median[i],
                self.rho_q05[i],
                self.rho_q95[i],
                self.dyad_var_mean[i],
                self.dyad_var_q05[i],
                self.dyad_var_q95[i],
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Evaluate the reciprocity curve over `grid`, draw by draw.
///
/// The grid must be nonempty, finite, and strictly increasing. Summaries use
/// the mean and the 5%/50%/95% quantiles of the per-draw values.
pub fn reciprocity_curve(draws: &ComponentDraws, grid: &[f64]) -> Result<ReciprocityCurve> {
    if grid.is_empty() {
        return Err(SrmError::InvalidInput("covariate grid is empty".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(SrmError::InvalidInput("covariate grid must be finite".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SrmError::InvalidInput(
            "covariate grid must be strictly increasing".into(),
        ));
    }
    draws.validate()?;

    let n = draws.len();
    let mut curve = ReciprocityCurve {
        grid: grid.to_vec(),
        rho_mean: Vec::with_capacity(grid.len()),
        rho_median: Vec::with_capacity(grid.len()),
        rho_q05: Vec::with_capacity(grid.len()),
        rho_q95: Vec::with_capacity(grid.len()),
        dyad_var_mean: Vec::with_capacity(grid.len()),
        dyad_var_median: Vec::with_capacity(grid.len()),
        dyad_var_q05: Vec::with_capacity(grid.len()),
        dyad_var_q95: Vec::with_capacity(grid.len()),
    };
    let mut rho = vec![0.0; n];
    let mut q = vec![0.0; n];
    for &x in grid {
        for i in 0..n {
            q[i] = dyadic_variance(draws.sigma_u[i], draws.sigma_v[i], draws.rho_uv[i], x);
            let sd = draws.sigma_d_at(i);
            rho[i] = q[i] / (q[i] + sd * sd + LATENT_RESIDUAL_VARIANCE);
        }
        let (rho_mean, rho_quants) = mean_and_quantiles(&mut rho);
        let (q_mean, q_quants) = mean_and_quantiles(&mut q);
        curve.rho_mean.push(rho_mean);
        curve.rho_q05.push(rho_quants[0]);
        curve.rho_median.push(rho_quants[1]);
        curve.rho_q95.push(rho_quants[2]);
        curve.dyad_var_mean.push(q_mean);
        curve.dyad_var_q05.push(q_quants[0]);
        curve.dyad_var_median.push(q_quants[1]);
        curve.dyad_var_q95.push(q_quants[2]);
    }
    Ok(curve)
}

/// Evaluate the curve directly from fitted samples over `grid`.
pub fn curve_from_samples(samples: &PosteriorSamples, grid: &[f64]) -> Result<ReciprocityCurve> {
    reciprocity_curve(&ComponentDraws::from_samples(samples)?, grid)
}

/// `n` evenly spaced points from `lo` to `hi` inclusive. With `n == 1`
/// returns just `lo`; otherwise endpoints are reproduced exactly.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    let mut out: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    out[n - 1] = hi;
    out
}

/// Sorts the scratch buffer in place; returns (mean, [q05, median, q95]).
fn mean_and_quantiles(values: &mut [f64]) -> (f64, [f64; 3]) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite summaries"));
    let quants = [
        crate::inference::quantile_sorted(values, 0.05),
        crate::inference::quantile_sorted(values, 0.50),
        crate::inference::quantile_sorted(values, 0.95),
    ];
    (mean, quants)
}
