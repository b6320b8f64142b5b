//! Command-line entry points.
//!
//! Three subcommands cover the batch workflow: `simulate` writes a seeded
//! synthetic dataset plus the generating truth, `fit` draws posterior samples
//! for a dataset, and `reciprocity` turns a fitted posterior into a
//! plot-ready reciprocity curve. Every command writes a JSON run manifest
//! recording the resolved configuration, input content hashes, and output
//! file list, so a run can be audited and replayed.
//!
//! Exit codes: 0 success, 2 usage error, 3 convergence failure under
//! `--strict`, 4 invalid input data. Any flag can also be supplied through
//! `--config FILE` as `key=value` lines (flag names without the leading
//! dashes); explicit command-line flags override the file.

use crate::data::{load_csv, IngestConfig, TransformSpec, DEFAULT_TOLERANCE};
use crate::error::{Result, SrmError};
use crate::inference::{fit, posterior_summary, summary_table, SamplerConfig};
use crate::model::{FixedEffects, ModelConfig, VarianceComponents};
use crate::reciprocity::{linspace, reciprocity_curve, ComponentDraws};
use crate::sim::{simulate, CovariateGenerator, Design, SimulationSpec, TrialsSpec};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Convergence threshold used by `fit` for its exit status and warnings.
const RHAT_THRESHOLD: f64 = 1.05;

#[derive(Debug, Parser)]
#[command(name = "srm", version, about = "Binomial social relations model with covariate-dependent dyadic reciprocity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic network dataset from known parameters.
    Simulate(SimulateArgs),
    /// Sample the posterior of the model on a dataset CSV.
    Fit(FitArgs),
    /// Evaluate the dyadic reciprocity curve from a fitted posterior.
    Reciprocity(ReciprocityArgs),
}

#[derive(Debug, Args, serde::Serialize)]
#[command(args_override_self = true, allow_negative_numbers = true)]
struct SimulateArgs {
    /// Key=value file supplying defaults for any flag of this command.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Full simulation spec as JSON; flags below are ignored when given.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Number of nodes.
    #[arg(long, default_value_t = 20)]
    nodes: usize,
    /// Binomial trials per directed observation.
    #[arg(long, default_value_t = 10)]
    trials: u64,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Intercept on the logit scale.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Covariate coefficient.
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_a: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_b: f64,
    #[arg(long, default_value_t = 0.0)]
    rho_ab: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_u: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_v: f64,
    #[arg(long, default_value_t = 0.0)]
    rho_uv: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_d: f64,
    /// Drop the overdispersion term from the generating model.
    #[arg(long)]
    no_overdispersion: bool,
    /// Dyad covariate distribution: uniform, binary, or constant.
    #[arg(long, default_value = "uniform")]
    covariate: String,
    /// Lower bound of the uniform covariate.
    #[arg(long, default_value_t = -1.0)]
    x_lo: f64,
    /// Upper bound of the uniform covariate.
    #[arg(long, default_value_t = 1.0)]
    x_hi: f64,
    /// Success probability of the binary covariate.
    #[arg(long, default_value_t = 0.5)]
    x_p: f64,
    /// Value of the constant covariate.
    #[arg(long, default_value_t = 0.0)]
    x_value: f64,
    /// Fraction of unordered dyads dropped completely at random.
    #[arg(long, default_value_t = 0.0)]
    missing_fraction: f64,
    /// Output path prefix; writes PREFIX.data.csv, PREFIX.truth.json,
    /// PREFIX.manifest.json.
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Debug, Args, serde::Serialize)]
#[command(args_override_self = true, allow_negative_numbers = true)]
struct FitArgs {
    /// Key=value file supplying defaults for any flag of this command.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Dataset CSV with one directed observation per row.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 4)]
    chains: usize,
    #[arg(long, default_value_t = 1000)]
    warmup: usize,
    #[arg(long, default_value_t = 1000)]
    sampling: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.8)]
    target_accept: f64,
    #[arg(long, default_value_t = 10)]
    max_treedepth: usize,
    /// Concurrent chain limit; defaults to the SRM_THREADS environment
    /// variable, then to the machine's available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// Exit with code 3 instead of 0 when any R-hat is 1.05 or above.
    #[arg(long)]
    strict: bool,
    /// Fit without the observation-level overdispersion term.
    #[arg(long)]
    no_overdispersion: bool,
    /// Keep every k-th draw of the latent effects in PREFIX.latents.csv
    /// (0 keeps none).
    #[arg(long, default_value_t = 0)]
    keep_latents: usize,
    /// Covariate transform applied at ingestion: none, center, standardize.
    #[arg(long, default_value = "none")]
    transform: TransformSpec,
    #[arg(long, default_value = "ego")]
    ego_column: String,
    #[arg(long, default_value = "alter")]
    alter_column: String,
    #[arg(long, default_value = "successes")]
    successes_column: String,
    #[arg(long, default_value = "trials")]
    trials_column: String,
    #[arg(long, default_value = "covariate")]
    covariate_column: String,
    /// Absolute tolerance for within-dyad covariate agreement.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    symmetry_tolerance: f64,
    /// Output path prefix; writes PREFIX.posterior.csv, PREFIX.meta.json,
    /// PREFIX.summary.txt, PREFIX.manifest.json.
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Debug, Args, serde::Serialize)]
#[command(args_override_self = true, allow_negative_numbers = true)]
struct ReciprocityArgs {
    /// Key=value file supplying defaults for any flag of this command.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Posterior CSV written by `fit`.
    #[arg(long)]
    posterior: PathBuf,
    /// Number of grid points over the covariate range; 0 evaluates the
    /// single point x = 0.
    #[arg(long, default_value_t = 101)]
    grid: usize,
    /// Grid lower endpoint; defaults to the fitted data's covariate minimum.
    #[arg(long)]
    x_min: Option<f64>,
    /// Grid upper endpoint; defaults to the fitted data's covariate maximum.
    #[arg(long)]
    x_max: Option<f64>,
    /// Output path prefix; writes PREFIX.curve.csv, PREFIX.manifest.json.
    #[arg(long)]
    out_prefix: PathBuf,
}

/// Parse `argv`, run the selected command, and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let args: Vec<String> = argv.into_iter().map(Into::into).collect();
    let args = match inject_config_file(args) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(&args, started),
        Command::Fit(args) => cmd_fit(&args, started),
        Command::Reciprocity(args) => cmd_reciprocity(&args, started),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_data_validation() {
                4
            } else {
                1
            }
        }
    }
}

/// Expand `--config FILE` into flag tokens inserted right after the
/// subcommand, so explicit flags (which come later) take precedence.
fn inject_config_file(mut args: Vec<String>) -> Result<Vec<String>> {
    let path = {
        let mut found: Option<PathBuf> = None;
        let mut it = args.iter().peekable();
        while let Some(arg) = it.next() {
            if arg == "--config" {
                if let Some(value) = it.peek() {
                    found = Some(PathBuf::from(*value));
                }
            } else if let Some(value) = arg.strip_prefix("--config=") {
                found = Some(PathBuf::from(value));
            }
        }
        match found {
            Some(p) => p,
            None => return Ok(args),
        }
    };
    if args.len() < 2 || args[1].starts_with('-') {
        return Ok(args);
    }
    let text = std::fs::read_to_string(&path)?;
    let mut injected = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            SrmError::InvalidInput(format!(
                "{}:{}: expected key=value, got `{line}`",
                path.display(),
                lineno + 1
            ))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match value {
            "true" => injected.push(format!("--{key}")),
            "false" => {}
            _ => {
                injected.push(format!("--{key}"));
                injected.push(value.to_string());
            }
        }
    }
    // Insert after `srm <subcommand>`.
    args.splice(2..2, injected);
    Ok(args)
}

/// Run manifest written alongside every command's outputs: enough context to
/// audit a run and replay it exactly.
#[derive(Debug, serde::Serialize)]
struct RunManifest {
    command: String,
    tool_version: String,
    seeds: Vec<u64>,
    config: serde_json::Value,
    /// SHA-256 of each input file's bytes, keyed by path.
    inputs: BTreeMap<String, String>,
    /// Files written by this run, in write order (this manifest excluded).
    outputs: Vec<String>,
    wall_clock_seconds: f64,
}

impl RunManifest {
    fn write(&self, prefix: &Path) -> Result<PathBuf> {
        let path = with_suffix(prefix, "manifest.json");
        write_json(&path, self)?;
        Ok(path)
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}.{suffix}", prefix.display()))
}

fn ensure_parent(prefix: &Path) -> Result<()> {
    if let Some(parent) = prefix.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| SrmError::InvalidInput(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn cmd_simulate(args: &SimulateArgs, started: Instant) -> Result<i32> {
    let spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<SimulationSpec>(&text)
                .map_err(|e| SrmError::InvalidSpec(format!("{}: {e}", path.display())))?
        }
        None => {
            let covariate = match args.covariate.as_str() {
                "uniform" => CovariateGenerator::Uniform { lo: args.x_lo, hi: args.x_hi },
                "binary" => CovariateGenerator::Binary { p: args.x_p },
                "constant" => CovariateGenerator::Constant { value: args.x_value },
                other => {
                    return Err(SrmError::InvalidSpec(format!(
                        "unknown covariate distribution `{other}` (expected uniform, binary, or constant)"
                    )))
                }
            };
            SimulationSpec {
                n_nodes: args.nodes,
                trials: TrialsSpec::Constant { trials: args.trials },
                covariate,
                fixed: FixedEffects { alpha: args.alpha, beta: args.beta },
                components: VarianceComponents {
                    sigma_a: args.sigma_a,
                    sigma_b: args.sigma_b,
                    rho_ab: args.rho_ab,
                    sigma_u: args.sigma_u,
                    sigma_v: args.sigma_v,
                    rho_uv: args.rho_uv,
                    sigma_d: args.sigma_d,
                },
                model: ModelConfig {
                    overdispersion_enabled: !args.no_overdispersion,
                },
                design: if args.missing_fraction > 0.0 {
                    Design::DyadMissing { fraction: args.missing_fraction }
                } else {
                    Design::Complete
                },
                seed: args.seed,
            }
        }
    };

    let (dataset, _latents) = simulate(&spec)?;
    ensure_parent(&args.out_prefix)?;
    let data_path = with_suffix(&args.out_prefix, "data.csv");
    dataset.write_csv(&data_path)?;
    let truth_path = with_suffix(&args.out_prefix, "truth.json");
    write_json(
        &truth_path,
        &serde_json::json!({
            "fixed": spec.fixed,
            "components": spec.components,
            "model": spec.model,
            "spec": spec,
        }),
    )?;

    let mut inputs = BTreeMap::new();
    if let Some(path) = &args.spec {
        inputs.insert(display(path), sha256_file(path)?);
    }
    let manifest = RunManifest {
        command: "simulate".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seeds: vec![spec.seed],
        config: serde_json::to_value(&spec)
            .map_err(|e| SrmError::InvalidInput(e.to_string()))?,
        inputs,
        outputs: vec![display(&data_path), display(&truth_path)],
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    manifest.write(&args.out_prefix)?;
    println!(
        "wrote {} ({} nodes, {} observations)",
        data_path.display(),
        dataset.n_nodes(),
        dataset.n_observations()
    );
    Ok(0)
}

fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("SRM_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0)
}

fn cmd_fit(args: &FitArgs, started: Instant) -> Result<i32> {
    let ingest_config = IngestConfig {
        ego_column: args.ego_column.clone(),
        alter_column: args.alter_column.clone(),
        successes_column: args.successes_column.clone(),
        trials_column: args.trials_column.clone(),
        covariate_column: args.covariate_column.clone(),
        transform: args.transform,
        symmetry_tolerance: args.symmetry_tolerance,
    };
    let dataset = load_csv(&args.data, &ingest_config)?;
    let model = ModelConfig {
        overdispersion_enabled: !args.no_overdispersion,
    };
    let sampler = SamplerConfig {
        chains: args.chains,
        warmup: args.warmup,
        sampling: args.sampling,
        seed: args.seed,
        target_accept: args.target_accept,
        max_treedepth: args.max_treedepth,
        init_jitter: 0.1,
        latent_thin: args.keep_latents,
        threads: resolve_threads(args.threads),
    };

    let (samples, diagnostics) = fit(&dataset, model, &sampler)?;
    for warning in &diagnostics.warnings {
        eprintln!("warning: {warning}");
    }

    ensure_parent(&args.out_prefix)?;
    let posterior_path = with_suffix(&args.out_prefix, "posterior.csv");
    let mut csv = samples.names().join(",");
    csv.push('\n');
    for c in 0..samples.n_chains() {
        for i in 0..samples.n_iterations() {
            let row: Vec<String> = (0..samples.names().len())
                .map(|k| samples.draws()[[c, i, k]].to_string())
                .collect();
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
    }
    std::fs::write(&posterior_path, csv)?;
    let mut outputs = vec![display(&posterior_path)];

    if let Some(latents) = samples.latent_draws() {
        let latents_path = with_suffix(&args.out_prefix, "latents.csv");
        let mut csv = samples.latent_names().join(",");
        csv.push('\n');
        let (n_chains, n_kept, n_latent) = latents.dim();
        for c in 0..n_chains {
            for i in 0..n_kept {
                let row: Vec<String> =
                    (0..n_latent).map(|k| latents[[c, i, k]].to_string()).collect();
                csv.push_str(&row.join(","));
                csv.push('\n');
            }
        }
        std::fs::write(&latents_path, csv)?;
        outputs.push(display(&latents_path));
    }

    let summary = posterior_summary(&samples);
    let table = summary_table(&summary);
    print!("{table}");
    let summary_path = with_suffix(&args.out_prefix, "summary.txt");
    std::fs::write(&summary_path, &table)?;
    outputs.push(display(&summary_path));

    let meta_path = with_suffix(&args.out_prefix, "meta.json");
    write_json(
        &meta_path,
        &serde_json::json!({
            "dataset": dataset.summarize(),
            "dataset_fingerprint": samples.fingerprint(),
            "sampler": samples.config(),
            "model": samples.model(),
            "diagnostics": diagnostics,
            "parameter_summary": summary,
        }),
    )?;
    outputs.push(display(&meta_path));

    let mut inputs = BTreeMap::new();
    inputs.insert(display(&args.data), sha256_file(&args.data)?);
    let manifest = RunManifest {
        command: "fit".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seeds: vec![sampler.seed],
        config: serde_json::json!({
            "args": args,
            "sampler": samples.config(),
            "model": samples.model(),
        }),
        inputs,
        outputs,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    manifest.write(&args.out_prefix)?;

    if !diagnostics.all_converged(RHAT_THRESHOLD) {
        let worst = diagnostics.max_rhat();
        if args.strict {
            eprintln!(
                "error: split R-hat {worst:.3} fails the {RHAT_THRESHOLD} convergence \
                 threshold (strict mode)"
            );
            return Ok(3);
        }
        eprintln!(
            "warning: split R-hat {worst:.3} exceeds {RHAT_THRESHOLD}; treat the \
             posterior summaries with caution"
        );
    }
    Ok(0)
}

/// Read a posterior CSV written by `cmd_fit`: header row of parameter names,
/// one draw per line.
fn read_posterior_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let names: Vec<String> = reader.headers()?.iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(rows.len() + 2);
        let row: Vec<f64> = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| SrmError::MalformedRow {
                    line,
                    message: format!("`{field}` is not a number"),
                })
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(SrmError::InvalidInput(format!(
            "{}: no posterior draws",
            path.display()
        )));
    }
    Ok((names, rows))
}

/// Covariate range recorded in the fit's meta JSON, looked up next to the
/// posterior CSV.
fn covariate_range_from_meta(posterior: &Path) -> Option<(f64, f64)> {
    let name = posterior.file_name()?.to_str()?;
    let stem = name.strip_suffix(".posterior.csv")?;
    let meta_path = posterior.with_file_name(format!("{stem}.meta.json"));
    let text = std::fs::read_to_string(meta_path).ok()?;
    let value: serde_json::Value = serde_json::from_str(&text).ok()?;
    let dataset = value.get("dataset")?;
    Some((
        dataset.get("covariate_min")?.as_f64()?,
        dataset.get("covariate_max")?.as_f64()?,
    ))
}

fn cmd_reciprocity(args: &ReciprocityArgs, started: Instant) -> Result<i32> {
    let (names, rows) = read_posterior_csv(&args.posterior)?;
    let draws = ComponentDraws::from_columns(&names, &rows)?;

    let grid = if args.grid == 0 {
        vec![0.0]
    } else {
        let range = match (args.x_min, args.x_max) {
            (Some(lo), Some(hi)) => Some((lo, hi)),
            (lo, hi) => covariate_range_from_meta(&args.posterior).map(|(meta_lo, meta_hi)| {
                (lo.unwrap_or(meta_lo), hi.unwrap_or(meta_hi))
            }),
        };
        let (lo, hi) = range.ok_or_else(|| {
            SrmError::InvalidInput(
                "covariate range unknown: no meta JSON next to the posterior CSV; \
                 pass --x-min and --x-max"
                    .into(),
            )
        })?;
        if lo > hi {
            return Err(SrmError::InvalidInput(format!(
                "empty covariate range: x-min {lo} exceeds x-max {hi}"
            )));
        }
        if lo == hi {
            vec![lo]
        } else {
            linspace(lo, hi, args.grid)
        }
    };
    let curve = reciprocity_curve(&draws, &grid)?;

    // Generalized reciprocity: the sender-receiver correlation, summarized
    // over the same posterior draws.
    let rho_ab_col = names
        .iter()
        .position(|n| n == "rho_ab")
        .ok_or_else(|| SrmError::MissingParameter("rho_ab".into()))?;
    let mut rho_ab: Vec<f64> = rows.iter().map(|r| r[rho_ab_col]).collect();
    let mean = rho_ab.iter().sum::<f64>() / rho_ab.len() as f64;
    let sd = (rho_ab.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
        / (rho_ab.len() as f64 - 1.0).max(1.0))
    .sqrt();
    rho_ab.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
    println!(
        "generalized reciprocity rho_ab: mean {:.4}, sd {:.4}, 90% CI [{:.4}, {:.4}]",
        mean,
        sd,
        crate::inference::quantile_sorted(&rho_ab, 0.05),
        crate::inference::quantile_sorted(&rho_ab, 0.95),
    );

    ensure_parent(&args.out_prefix)?;
    let curve_path = with_suffix(&args.out_prefix, "curve.csv");
    curve.write_csv(&curve_path)?;
    println!("wrote {} ({} grid points)", curve_path.display(), curve.len());

    let mut inputs = BTreeMap::new();
    inputs.insert(display(&args.posterior), sha256_file(&args.posterior)?);
    let manifest = RunManifest {
        command: "reciprocity".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seeds: vec![],
        config: serde_json::json!({
            "args": args,
            "grid_points": grid.len(),
            "grid_min": grid.first(),
            "grid_max": grid.last(),
        }),
        inputs,
        outputs: vec![display(&curve_path)],
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    manifest.write(&args.out_prefix)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_tokens_insert_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "# defaults\nchains=8\nstrict=true\nquiet=false\n").unwrap();
        let args = vec![
            "srm".to_string(),
            "fit".to_string(),
            "--config".to_string(),
            cfg.display().to_string(),
            "--chains".to_string(),
            "2".to_string(),
        ];
        let out = inject_config_file(args).unwrap();
        assert_eq!(
            out[..5],
            ["srm", "fit", "--chains", "8", "--strict"].map(String::from)
        );
        // The explicit flag stays after the injected tokens, so it wins.
        let last_chains = out.iter().rposition(|a| a == "--chains").unwrap();
        assert_eq!(out[last_chains + 1], "2");
        assert!(!out.contains(&"--quiet".to_string()));
    }

    #[test]
    fn config_injection_without_config_flag_is_identity() {
        let args = vec!["srm".into(), "fit".into(), "--chains".into(), "2".into()];
        assert_eq!(inject_config_file(args.clone()).unwrap(), args);
    }

    #[test]
    fn malformed_config_line_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "chains 8\n").unwrap();
        let args = vec![
            "srm".into(),
            "fit".into(),
            "--config".into(),
            cfg.display().to_string(),
        ];
        assert!(inject_config_file(args).is_err());
    }

    #[test]
    fn threads_fall_back_to_env_then_auto() {
        assert_eq!(resolve_threads(Some(3)), 3);
        // Without the flag the value comes from SRM_THREADS or defaults to
        // 0 (auto); both are exercised end to end in the binary tests.
    }

    #[test]
    fn suffix_paths_share_the_prefix() {
        let p = with_suffix(Path::new("out/run1"), "data.csv");
        assert_eq!(p, PathBuf::from("out/run1.data.csv"));
    }
}
