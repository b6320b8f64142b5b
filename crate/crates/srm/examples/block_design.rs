//! Ingest an incomplete (block) design from CSV: remapped column names, a
//! standardized covariate, and the validation the loader performs on the way
//! in — symmetric covariates per dyad, successes bounded by trials, no
//! self-loops, no duplicated directed cells.
//!
//! ```text
//! cargo run --release --example block_design
//! ```

use srm::data::{load_csv, IngestConfig, TransformSpec};
use std::io::Write;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Two classrooms observed as blocks: within-room dyads only, and one
    // one-directional pair (miriam -> otto observed, otto -> miriam not).
    // Columns use survey-style names to show the remapping.
    let csv = "\
rater,target,times_helped,occasions,grade_gap,comment
ana,bela,3,10,0.5,roommates
bela,ana,5,10,0.5,
ana,cora,1,8,1.5,
cora,ana,2,8,1.5,same floor
bela,cora,4,10,-1.0,
cora,bela,6,10,-1.0,
miriam,otto,2,12,2.0,new arrival
";
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("helping.csv");
    std::fs::File::create(&path)?.write_all(csv.as_bytes())?;

    let config = IngestConfig {
        ego_column: "rater".into(),
        alter_column: "target".into(),
        successes_column: "times_helped".into(),
        trials_column: "occasions".into(),
        covariate_column: "grade_gap".into(),
        transform: TransformSpec::Standardize,
        ..IngestConfig::default()
    };
    let dataset = load_csv(&path, &config)?;
    println!(
        "loaded {} directed cells over {} nodes and {} dyads (extra columns ignored)",
        dataset.n_observations(),
        dataset.n_nodes(),
        dataset.n_dyads()
    );

    // The standardization is computed over unordered dyads, not directed
    // rows, so a dyad observed in both directions is not double-weighted.
    println!("\nstandardized covariates per directed cell:");
    for obs in dataset.observations() {
        println!(
            "  {:<7} -> {:<7} {:>2}/{:<3} x = {:+.4}",
            dataset.node_label(obs.ego),
            dataset.node_label(obs.alter),
            obs.successes,
            obs.trials,
            obs.covariate
        );
    }
    let mean: f64 = {
        let mut per_dyad = std::collections::BTreeMap::new();
        for (m, obs) in dataset.observations().iter().enumerate() {
            per_dyad.entry(dataset.obs_dyad(m).0).or_insert(obs.covariate);
        }
        per_dyad.values().sum::<f64>() / per_dyad.len() as f64
    };
    println!("dyad-level mean after standardization: {mean:+.2e}");

    // Malformed inputs are rejected with the offending line. Here the two
    // directions of a dyad disagree about their "symmetric" covariate.
    let bad = "\
rater,target,times_helped,occasions,grade_gap,comment
ana,bela,3,10,0.5,
bela,ana,5,10,0.7,typo
";
    let bad_path = dir.path().join("asymmetric.csv");
    std::fs::File::create(&bad_path)?.write_all(bad.as_bytes())?;
    match load_csv(&bad_path, &config) {
        Err(e) => println!("\nasymmetric covariate rejected: {e}"),
        Ok(_) => unreachable!("validation must reject asymmetric covariates"),
    }

    // Successes above the trial count are caught the same way.
    let overfull = "\
rater,target,times_helped,occasions,grade_gap,comment
ana,bela,11,10,0.5,
";
    let overfull_path = dir.path().join("overfull.csv");
    std::fs::File::create(&overfull_path)?.write_all(overfull.as_bytes())?;
    match load_csv(&overfull_path, &config) {
        Err(e) => println!("successes > trials rejected:    {e}"),
        Ok(_) => unreachable!("validation must bound successes by trials"),
    }
    Ok(())
}
