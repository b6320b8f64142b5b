//! Fit the model to a simulated network and read the posterior: summary
//! table, convergence diagnostics, and a few derived quantities.
//!
//! ```text
//! cargo run --release --example fit_posterior
//! ```

use srm::inference::{fit, posterior_summary, SamplerConfig};
use srm::reciprocity::generalized_reciprocity;
use srm::sim::{CovariateGenerator, Design, TrialsSpec};
use srm::{simulate, FixedEffects, ModelConfig, SimulationSpec, VarianceComponents};

fn main() -> Result<(), srm::SrmError> {
    // A small round robin keeps this example around half a minute; the
    // parameter_recovery example runs the full-length protocol.
    let spec = SimulationSpec {
        n_nodes: 25,
        trials: TrialsSpec::Constant { trials: 20 },
        covariate: CovariateGenerator::Uniform { lo: -3.0, hi: 3.0 },
        fixed: FixedEffects {
            alpha: -1.0,
            beta: 0.5,
        },
        components: VarianceComponents {
            sigma_a: 0.8,
            sigma_b: 0.6,
            rho_ab: 0.3,
            sigma_u: 1.0,
            sigma_v: 0.5,
            rho_uv: 0.4,
            sigma_d: 0.3,
        },
        model: ModelConfig::default(),
        design: Design::Complete,
        seed: 11,
    };
    let (dataset, _) = simulate(&spec)?;
    println!(
        "fitting {} directed cells over {} nodes...",
        dataset.n_observations(),
        dataset.n_nodes()
    );

    let config = SamplerConfig {
        chains: 4,
        warmup: 500,
        sampling: 500,
        seed: 11,
        threads: 1,
        ..SamplerConfig::default()
    };
    let (samples, diagnostics) = fit(&dataset, ModelConfig::default(), &config)?;

    // One row per population parameter: posterior moments, central 90%
    // interval, split R-hat, effective sample size.
    println!("\n{}", srm::inference::summary_table(&posterior_summary(&samples)));

    println!(
        "max R-hat {:.3}, min ESS {:.0}, divergence rate {:.2}%",
        diagnostics.max_rhat(),
        diagnostics.min_ess(),
        100.0 * diagnostics.divergence_rate(config.sampling)
    );
    for warning in &diagnostics.warnings {
        println!("warning: {warning}");
    }
    if !diagnostics.all_converged(1.05) {
        println!("chains have not converged; lengthen warmup/sampling before trusting this run");
    }

    // Generalized (sender-receiver) reciprocity is just the posterior of
    // rho_ab; the dyadic counterpart lives in the reciprocity_curve example.
    let rho_ab = generalized_reciprocity(&samples)?;
    println!(
        "\ngeneralized reciprocity rho_ab: mean {:+.3}, 90% interval [{:+.3}, {:+.3}]",
        rho_ab.mean, rho_ab.q05, rho_ab.q95
    );

    // Raw draws stay available as a chains x iterations x parameter cube.
    let draws = samples.draws();
    println!(
        "draw cube: {} chains x {} iterations x {} parameters",
        draws.shape()[0],
        draws.shape()[1],
        draws.shape()[2]
    );
    Ok(())
}
