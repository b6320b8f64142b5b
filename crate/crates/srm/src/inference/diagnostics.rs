//! Convergence diagnostics: split potential-scale-reduction (R-hat),
//! autocorrelation-based effective sample size, and posterior summaries.

use crate::error::{Result, SrmError};

/// Split each chain in half and return the segments (the middle draw of an
/// odd-length chain is dropped).
fn split_chains(chains: &[Vec<f64>]) -> Vec<&[f64]> {
    let mut segments = Vec::with_capacity(2 * chains.len());
    for chain in chains {
        let half = chain.len() / 2;
        segments.push(&chain[..half]);
        segments.push(&chain[chain.len() - half..]);
    }
    segments
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Split-chain potential scale reduction factor.
///
/// Chains are halved, then the classic PSRF
/// `sqrt(((n-1)/n * W + B/n) / W)` is computed over the segments. Returns NaN
/// when every segment is constant (zero within-variance) — a degenerate-chain
/// flag rather than a crash.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64> {
    if chains.len() < 2 || chains.iter().any(|c| c.len() < 8) {
        return Err(SrmError::InsufficientDraws(
            "split R-hat needs at least 2 chains of at least 8 draws".into(),
        ));
    }
    let segments = split_chains(chains);
    let n = segments[0].len() as f64;
    let m = segments.len() as f64;
    let seg_means: Vec<f64> = segments.iter().map(|s| mean(s)).collect();
    let w = segments.iter().map(|s| sample_var(s)).sum::<f64>() / m;
    let b_over_n = sample_var(&seg_means);
    if w == 0.0 {
        return Ok(f64::NAN);
    }
    let var_plus = (n - 1.0) / n * w + b_over_n;
    Ok((var_plus / w).sqrt())
}

/// Biased (1/n) autocovariance of one segment at every lag.
fn autocovariance(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let m = mean(xs);
    let centered: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let mut acov = Vec::with_capacity(n);
    for lag in 0..n {
        let mut s = 0.0;
        for i in 0..(n - lag) {
            s += centered[i] * centered[i + lag];
        }
        acov.push(s / n as f64);
    }
    acov
}

/// Effective sample size via Geyer's initial monotone positive sequence over
/// split chains, capped at the total draw count. Constant chains report 0.
pub fn effective_sample_size(chains: &[Vec<f64>]) -> Result<f64> {
    if chains.is_empty() || chains.iter().any(|c| c.len() < 8) {
        return Err(SrmError::InsufficientDraws(
            "effective sample size needs chains of at least 8 draws".into(),
        ));
    }
    let total: usize = chains.iter().map(|c| c.len()).sum();
    let segments = split_chains(chains);
    let n = segments[0].len();
    let m = segments.len() as f64;

    let acovs: Vec<Vec<f64>> = segments.iter().map(|s| autocovariance(s)).collect();
    let seg_means: Vec<f64> = segments.iter().map(|s| mean(s)).collect();
    let w = segments.iter().map(|s| sample_var(s)).sum::<f64>() / m;
    let b_over_n = if segments.len() > 1 {
        sample_var(&seg_means)
    } else {
        0.0
    };
    let var_plus = (n as f64 - 1.0) / n as f64 * w + b_over_n;
    if var_plus <= 0.0 || !var_plus.is_finite() {
        return Ok(0.0);
    }

    let unbias = n as f64 / (n as f64 - 1.0);
    let rho = |lag: usize| -> f64 {
        let acov_mean = acovs.iter().map(|a| a[lag] * unbias).sum::<f64>() / m;
        1.0 - (w - acov_mean) / var_plus
    };

    // Sum Geyer pairs while positive, forcing monotone decrease.
    let mut sum_pairs = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        sum_pairs += pair;
        prev_pair = pair;
        lag += 2;
    }
    let tau = (-1.0 + 2.0 * sum_pairs).max(f64::EPSILON);
    Ok((total as f64 / tau).min(total as f64))
}

/// Type-7 (linear interpolation) quantile of an ascending-sorted slice.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-parameter posterior summary row.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
    pub rhat: f64,
    pub ess: f64,
}

/// Summarize one parameter's chains: mean, sd, 5%/50%/95% quantiles, split
/// R-hat, and effective sample size. R-hat and ESS are NaN when the chain
/// layout cannot support them (single short chains).
pub fn summarize_parameter(name: &str, chains: &[Vec<f64>]) -> ParameterSummary {
    let mut flat: Vec<f64> = chains.iter().flatten().copied().collect();
    let mean_ = mean(&flat);
    let sd = if flat.len() > 1 { sample_var(&flat).sqrt() } else { 0.0 };
    flat.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
    ParameterSummary {
        name: name.to_string(),
        mean: mean_,
        sd,
        q05: quantile_sorted(&flat, 0.05),
        median: quantile_sorted(&flat, 0.50),
        q95: quantile_sorted(&flat, 0.95),
        rhat: split_rhat(chains).unwrap_or(f64::NAN),
        ess: effective_sample_size(chains).unwrap_or(f64::NAN),
    }
}

/// Render summaries as a fixed-width text table.
pub fn summary_table(rows: &[ParameterSummary]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>10} {:>10} {:>10} {:>10} {:>10} {:>8} {:>8}\n",
        "parameter", "mean", "sd", "q05", "median", "q95", "rhat", "ess"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<12} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>8.3} {:>8.0}\n",
            r.name, r.mean, r.sd, r.q05, r.median, r.q95, r.rhat, r.ess
        ));
    }
    out
}
