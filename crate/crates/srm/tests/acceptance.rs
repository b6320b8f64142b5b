//! Shipping acceptance suite: one test per release criterion, each printing a
//! single `PASS — ...` / `FAIL — ...` line (run with `--nocapture` to see the
//! lines as they happen) before asserting.
//!
//! The heavy tests (parameter recovery, curve recovery) rerun the full
//! simulate-and-fit pipeline at a fixed, pre-registered protocol: five seeds
//! chosen up front, a moderate-signal truth, and the sampler at its
//! documented settings. Everything is seeded, so the outcomes are
//! reproducible draw-for-draw on a given platform.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use srm::inference::{fit, posterior_summary, SamplerConfig};
use srm::model::Posterior;
use srm::reciprocity::curve_from_samples;
use srm::sim::{empirical_moments, CovariateGenerator, Design, TrialsSpec};
use srm::{
    dyadic_reciprocity, dyadic_variance, simulate, FixedEffects, ModelConfig, SimulationSpec,
    VarianceComponents, LATENT_RESIDUAL_VARIANCE,
};
use std::time::Instant;

fn report(ok: bool, line: &str) {
    println!("{} — {}", if ok { "PASS" } else { "FAIL" }, line);
}

/// The truth used by the recovery studies: a moderate-signal regime where
/// every component is active but none dominates the linear predictor.
fn recovery_truth() -> (FixedEffects, VarianceComponents) {
    (
        FixedEffects {
            alpha: -1.0,
            beta: 0.5,
        },
        VarianceComponents {
            sigma_a: 0.8,
            sigma_b: 0.6,
            rho_ab: 0.3,
            sigma_u: 1.0,
            sigma_v: 0.5,
            rho_uv: 0.4,
            sigma_d: 0.3,
        },
    )
}

/// One recovery dataset: a complete round robin of 40 nodes, 20 trials per
/// directed cell, dyad covariate Uniform(-3, 3). The wide covariate range
/// puts real information on the dyad slope scale, which is what makes the
/// slope components identifiable at this network size.
fn recovery_spec(seed: u64) -> SimulationSpec {
    let (fixed, components) = recovery_truth();
    SimulationSpec {
        n_nodes: 40,
        trials: TrialsSpec::Constant { trials: 20 },
        covariate: CovariateGenerator::Uniform { lo: -3.0, hi: 3.0 },
        fixed,
        components,
        model: ModelConfig::default(),
        design: Design::Complete,
        seed,
    }
}

/// Sampler settings for the recovery studies. The acceptance target of
/// 0.92 is higher than the library default; the dyad-scale coordinates mix
/// slowly enough at 0.8 that the effective-sample-size floor needs the
/// smaller steps.
fn recovery_sampler(seed: u64) -> SamplerConfig {
    SamplerConfig {
        chains: 4,
        warmup: 1000,
        sampling: 1000,
        seed,
        target_accept: 0.92,
        threads: 1,
        ..SamplerConfig::default()
    }
}

/// Criterion: `dyadic_variance` and `dyadic_reciprocity` agree with an
/// independent direct evaluation (explicit covariance matrix quadratic form)
/// on 10^4 random valid inputs to 1e-12 absolute, in under 5 seconds.
#[test]
fn formula_oracle_agreement() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let su: f64 = rng.random_range(0.0..3.0);
        let sv: f64 = rng.random_range(0.0..3.0);
        let r: f64 = rng.random_range(-1.0..=1.0);
        let sd: f64 = rng.random_range(0.0..3.0);
        let x: f64 = rng.random_range(-10.0..10.0);

        // Oracle: e' S e with S the explicit 2x2 dyad covariance matrix and
        // e = (1, x), evaluated as a plain double loop.
        let e = [1.0, x];
        let s = [[su * su, r * su * sv], [r * su * sv, sv * sv]];
        let mut q = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                q += e[i] * s[i][j] * e[j];
            }
        }
        let var_oracle = q.max(0.0);
        let rho_oracle = var_oracle / (var_oracle + sd * sd + LATENT_RESIDUAL_VARIANCE);

        let dv = (dyadic_variance(su, sv, r, x) - var_oracle).abs();
        let dr = (dyadic_reciprocity(su, sv, r, sd, x) - rho_oracle).abs();
        worst = worst.max(dv).max(dr);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst <= 1e-12 && elapsed < 5.0;
    report(
        ok,
        &format!(
            "formula oracle: 10^4 inputs, max |difference| {worst:.2e} (limit 1e-12), {elapsed:.2} s"
        ),
    );
    assert!(ok, "worst deviation {worst:.3e}, elapsed {elapsed:.2} s");
}

/// Criterion: over 10^4 random positive-semidefinite component draws and
/// covariates spanning [-100, 100], the dyad variance is nonnegative and the
/// reciprocity correlation lies in [0, 1), with zero violations. Boundary
/// cases (zero scales, correlations of exactly +/-1, extreme x) are forced in.
#[test]
fn range_and_psd_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let mut violations = 0usize;
    for k in 0..10_000 {
        let mut su: f64 = rng.random_range(0.0..10.0);
        let mut sv: f64 = rng.random_range(0.0..10.0);
        let mut r: f64 = rng.random_range(-1.0..=1.0);
        let sd: f64 = rng.random_range(0.0..5.0);
        let mut x: f64 = rng.random_range(-100.0..=100.0);
        // Exercise the exact boundaries in rotation.
        match k % 13 {
            0 => su = 0.0,
            1 => sv = 0.0,
            2 => r = 1.0,
            3 => r = -1.0,
            4 => x = 100.0,
            5 => x = -100.0,
            6 => {
                su = 0.0;
                sv = 0.0;
            }
            _ => {}
        }
        let var = dyadic_variance(su, sv, r, x);
        let rho = dyadic_reciprocity(su, sv, r, sd, x);
        if !(var >= 0.0) || !(rho >= 0.0) || !(rho < 1.0) {
            violations += 1;
        }
    }
    let ok = violations == 0;
    report(
        ok,
        &format!("range/PSD properties: 10^4 draws, x in [-100, 100], {violations} violations"),
    );
    assert_eq!(violations, 0);
}

/// Criterion: with the dyad slope switched off (sigma_v = 0, rho_uv = 0) the
/// reciprocity correlation is exactly covariate-free and equals the
/// conventional intercept-only form sigma_u^2 / (sigma_u^2 + sigma_d^2 +
/// pi^2/3), bit for bit.
#[test]
fn conventional_nesting_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let mut ok = true;
    for _ in 0..1_000 {
        let su: f64 = rng.random_range(0.01..5.0);
        let sd: f64 = rng.random_range(0.0..3.0);
        let expected = su * su / (su * su + sd * sd + LATENT_RESIDUAL_VARIANCE);
        let at_zero = dyadic_reciprocity(su, 0.0, 0.0, sd, 0.0);
        ok &= at_zero == expected;
        for _ in 0..20 {
            let x: f64 = rng.random_range(-50.0..50.0);
            ok &= dyadic_reciprocity(su, 0.0, 0.0, sd, x) == expected;
        }
    }
    report(
        ok,
        "nesting: sigma_v = 0 reduces exactly to the conventional x-free reciprocity",
    );
    assert!(ok);
}

/// Criterion: the analytic gradient of the unconstrained log-posterior
/// matches central finite differences (h = 1e-5) within 1e-6 relative error
/// on 100 random small instances (6 nodes), in under 30 seconds.
#[test]
fn gradient_matches_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let mut worst = 0.0f64;
    for instance in 0..100u64 {
        let od = instance % 3 != 2;
        let spec = SimulationSpec {
            n_nodes: 6,
            trials: TrialsSpec::Constant {
                trials: rng.random_range(3..25),
            },
            covariate: if instance % 4 == 0 {
                CovariateGenerator::Binary { p: 0.4 }
            } else {
                CovariateGenerator::Uniform { lo: -2.0, hi: 2.0 }
            },
            fixed: FixedEffects {
                alpha: rng.random_range(-1.5..1.5),
                beta: rng.random_range(-1.0..1.0),
            },
            components: VarianceComponents {
                sigma_a: rng.random_range(0.2..1.5),
                sigma_b: rng.random_range(0.2..1.5),
                rho_ab: rng.random_range(-0.8..0.8),
                sigma_u: rng.random_range(0.2..1.5),
                sigma_v: rng.random_range(0.2..1.5),
                rho_uv: rng.random_range(-0.8..0.8),
                sigma_d: if od { rng.random_range(0.1..0.8) } else { 0.0 },
            },
            model: ModelConfig {
                overdispersion_enabled: od,
            },
            design: if instance % 5 == 4 {
                Design::DyadMissing { fraction: 0.3 }
            } else {
                Design::Complete
            },
            seed: 40_000 + instance,
        };
        let (dataset, _) = simulate(&spec).expect("simulation");
        let posterior = Posterior::new(&dataset, spec.model);
        let theta: Vec<f64> = (0..posterior.dim())
            .map(|_| rng.random_range(-0.8..0.8))
            .collect();
        let (_, grad) = posterior.logp_with_grad(&theta);
        let h = 1e-5;
        for k in 0..posterior.dim() {
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[k] += h;
            dn[k] -= h;
            let (fu, _) = posterior.logp_with_grad(&up);
            let (fd, _) = posterior.logp_with_grad(&dn);
            let fd_grad = (fu - fd) / (2.0 * h);
            let scale = grad[k].abs().max(fd_grad.abs()).max(1.0);
            worst = worst.max((grad[k] - fd_grad).abs() / scale);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst <= 1e-6 && elapsed < 30.0;
    report(
        ok,
        &format!(
            "gradient check: 100 instances, max relative error {worst:.2e} (limit 1e-6), {elapsed:.1} s"
        ),
    );
    assert!(ok, "worst relative error {worst:.3e}, elapsed {elapsed:.2} s");
}

/// Criterion: across five pre-registered seeds, simulating 40 nodes at 20
/// trials per cell from the moderate-signal truth and fitting with 4 chains
/// of 1000 + 1000 iterations yields, in every seed, split R-hat < 1.05 and
/// effective sample size > 200 for all nine population parameters, and in at
/// least 4 of the 5 seeds the central 90% credible intervals cover at least
/// 7 of the 9 true values; total runtime under 15 minutes.
#[test]
fn parameter_recovery_across_seeds() {
    let start = Instant::now();
    let (fixed, c) = recovery_truth();
    let truth = [
        ("alpha", fixed.alpha),
        ("beta", fixed.beta),
        ("sigma_a", c.sigma_a),
        ("sigma_b", c.sigma_b),
        ("rho_ab", c.rho_ab),
        ("sigma_u", c.sigma_u),
        ("sigma_v", c.sigma_v),
        ("rho_uv", c.rho_uv),
        ("sigma_d", c.sigma_d),
    ];

    let mut all_converged = true;
    let mut worst_rhat = 0.0f64;
    let mut worst_ess = f64::INFINITY;
    let mut seeds_covering = 0usize;
    for seed in 1..=5u64 {
        let (dataset, _) = simulate(&recovery_spec(seed)).expect("simulation");
        let (samples, diag) =
            fit(&dataset, ModelConfig::default(), &recovery_sampler(seed)).expect("fit");
        worst_rhat = worst_rhat.max(diag.max_rhat());
        worst_ess = worst_ess.min(diag.min_ess());
        if !diag.all_converged(1.05) || !(diag.min_ess() > 200.0) {
            all_converged = false;
        }
        let summary = posterior_summary(&samples);
        let covered = truth
            .iter()
            .filter(|(name, value)| {
                summary
                    .iter()
                    .find(|row| row.name == *name)
                    .is_some_and(|row| row.q05 <= *value && *value <= row.q95)
            })
            .count();
        println!("  seed {seed}: {covered}/9 true values inside 90% intervals");
        if covered >= 7 {
            seeds_covering += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = all_converged && seeds_covering >= 4 && elapsed < 900.0;
    report(
        ok,
        &format!(
            "parameter recovery: 5 seeds, max R-hat {worst_rhat:.3} (< 1.05), min ESS {worst_ess:.0} (> 200), coverage >= 7/9 in {seeds_covering}/5 seeds (>= 4), {elapsed:.0} s (< 900)"
        ),
    );
    assert!(
        ok,
        "converged={all_converged} seeds_covering={seeds_covering} elapsed={elapsed:.0}s"
    );
}

/// Criterion: on the recovery fit, the posterior mean reciprocity curve at
/// the minimum, mean, and maximum of the simulated covariate stays within
/// the 5%-95% posterior band, and that band covers the true-parameter curve,
/// at all three points.
#[test]
fn reciprocity_curve_recovery() {
    let (dataset, _) = simulate(&recovery_spec(1)).expect("simulation");
    let (samples, _) = fit(&dataset, ModelConfig::default(), &recovery_sampler(1)).expect("fit");

    let covariates: Vec<f64> = dataset
        .observations()
        .iter()
        .map(|obs| obs.covariate)
        .collect();
    let x_min = covariates.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = covariates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let x_mean = covariates.iter().sum::<f64>() / covariates.len() as f64;
    let grid = [x_min, x_mean, x_max];

    let curve = curve_from_samples(&samples, &grid).expect("curve");
    let (_, c) = recovery_truth();
    let mut ok = true;
    for (i, &x) in grid.iter().enumerate() {
        let true_rho = dyadic_reciprocity(c.sigma_u, c.sigma_v, c.rho_uv, c.sigma_d, x);
        let band = (curve.rho_q05[i], curve.rho_q95[i]);
        let truth_in_band = band.0 <= true_rho && true_rho <= band.1;
        let mean_near_truth = (curve.rho_mean[i] - true_rho).abs() <= band.1 - band.0;
        println!(
            "  x = {x:+.3}: true rho {true_rho:.4}, posterior mean {:.4}, band [{:.4}, {:.4}]",
            curve.rho_mean[i], band.0, band.1
        );
        ok &= truth_in_band && mean_near_truth;
    }
    report(
        ok,
        "curve recovery: true rho(x) inside the 5%-95% band at the covariate min, mean, and max",
    );
    assert!(ok);
}

/// Criterion: the empirical moments of one large simulated draw match the
/// generating components within three Monte Carlo standard errors, in under
/// a minute. Standard errors use the usual large-sample forms: a sample
/// variance of M normal draws has standard error var * sqrt(2 / (M - 1)),
/// and a sample correlation has (1 - rho^2) / sqrt(M - 1).
#[test]
fn simulator_moments_match_components() {
    let start = Instant::now();
    let (fixed, c) = recovery_truth();
    let spec = SimulationSpec {
        n_nodes: 2000,
        trials: TrialsSpec::Constant { trials: 1 },
        covariate: CovariateGenerator::Uniform { lo: -1.0, hi: 1.0 },
        fixed,
        components: c,
        model: ModelConfig::default(),
        design: Design::DyadMissing { fraction: 0.995 },
        seed: 2024,
    };
    let (dataset, latents) = simulate(&spec).expect("simulation");
    let m = empirical_moments(&dataset, &latents);

    let nodes = m.n_nodes as f64;
    let dyads = m.n_dyads as f64;
    let cells = m.n_observations as f64;
    let var_se = |v: f64, n: f64| v * (2.0 / (n - 1.0)).sqrt();
    let corr_se = |r: f64, n: f64| (1.0 - r * r) / (n - 1.0).sqrt();

    let checks = [
        ("var(a)", m.var_sender, c.sigma_a * c.sigma_a, var_se(c.sigma_a * c.sigma_a, nodes)),
        ("var(b)", m.var_receiver, c.sigma_b * c.sigma_b, var_se(c.sigma_b * c.sigma_b, nodes)),
        ("corr(a,b)", m.corr_sender_receiver, c.rho_ab, corr_se(c.rho_ab, nodes)),
        ("var(u)", m.var_dyad_intercept, c.sigma_u * c.sigma_u, var_se(c.sigma_u * c.sigma_u, dyads)),
        ("var(v)", m.var_dyad_slope, c.sigma_v * c.sigma_v, var_se(c.sigma_v * c.sigma_v, dyads)),
        ("corr(u,v)", m.corr_dyad, c.rho_uv, corr_se(c.rho_uv, dyads)),
        (
            "var(d)",
            m.var_overdispersion.expect("overdispersion enabled"),
            c.sigma_d * c.sigma_d,
            var_se(c.sigma_d * c.sigma_d, cells),
        ),
    ];
    let mut ok = true;
    let mut worst_z = 0.0f64;
    for (name, got, want, se) in checks {
        let z = (got - want).abs() / se;
        worst_z = worst_z.max(z);
        if z > 3.0 {
            println!("  {name}: {got:.4} vs {want:.4}, {z:.2} standard errors");
            ok = false;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 60.0;
    report(
        ok,
        &format!(
            "simulator moments: {} nodes / {} dyads / {} cells, worst deviation {worst_z:.2} MC standard errors (< 3), {elapsed:.1} s",
            m.n_nodes, m.n_dyads, m.n_observations
        ),
    );
    assert!(ok, "worst z {worst_z:.2}, elapsed {elapsed:.1} s");
}

/// Criterion: repeated seeded end-to-end runs (simulate, fit, reciprocity
/// curve through the command-line interface) produce byte-identical output
/// files at a fixed thread count. Run manifests are exempt: they record wall
///-clock time.
#[test]
fn seeded_runs_are_byte_identical() {
    let exe = env!("CARGO_BIN_EXE_srm");
    let dir = tempfile::tempdir().expect("tempdir");
    let run = |args: &[String]| {
        let status = std::process::Command::new(exe)
            .args(args)
            .stdout(std::process::Stdio::null())
            .stderr(std::process::Stdio::null())
            .status()
            .expect("spawn");
        assert!(status.success(), "command failed: {args:?}");
    };

    for tag in ["a", "b"] {
        let prefix = |stage: &str| {
            dir.path()
                .join(format!("{tag}_{stage}"))
                .to_string_lossy()
                .into_owned()
        };
        let sim = prefix("sim");
        let fitp = prefix("fit");
        let curve = prefix("curve");
        run(&[
            "simulate", "--nodes", "12", "--trials", "8", "--seed", "7",
            "--alpha", "-0.5", "--beta", "0.4", "--sigma-a", "0.7", "--sigma-b", "0.5",
            "--rho-ab", "0.2", "--sigma-u", "0.9", "--sigma-v", "0.4", "--rho-uv", "0.3",
            "--sigma-d", "0.25", "--covariate", "uniform", "--x-lo", "-1", "--x-hi", "1",
            "--out-prefix", &sim,
        ]
        .map(String::from));
        run(&[
            "fit", "--data", &format!("{sim}.data.csv"), "--chains", "2",
            "--warmup", "200", "--sampling", "200", "--seed", "7", "--threads", "2",
            "--keep-latents", "10", "--out-prefix", &fitp,
        ]
        .map(String::from));
        run(&[
            "reciprocity", "--posterior", &format!("{fitp}.posterior.csv"),
            "--grid", "21", "--out-prefix", &curve,
        ]
        .map(String::from));
    }

    let artifacts = [
        "sim.data.csv",
        "sim.truth.json",
        "fit.posterior.csv",
        "fit.latents.csv",
        "fit.summary.txt",
        "fit.meta.json",
        "curve.curve.csv",
    ];
    let mut ok = true;
    for name in artifacts {
        let a = std::fs::read(dir.path().join(format!("a_{name}"))).expect(name);
        let b = std::fs::read(dir.path().join(format!("b_{name}"))).expect(name);
        if a != b {
            println!("  {name}: outputs differ between identically seeded runs");
            ok = false;
        }
    }
    report(
        ok,
        &format!(
            "determinism: {} artifacts byte-identical across repeated seeded runs",
            artifacts.len()
        ),
    );
    assert!(ok);
}
