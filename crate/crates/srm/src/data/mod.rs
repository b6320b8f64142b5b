//! Directed dyadic observation data.
//!
//! A [`NetworkDataset`] holds directed binomial observations `(ego -> alter,
//! successes/trials, covariate)` over a node roster, together with a symmetric
//! dyad index: both directions of an unordered pair share one [`DyadIndex`],
//! which is what lets the model give each dyad a single intercept/slope pair.
//!
//! Construction canonicalizes the data so that the result is independent of
//! input row order: node labels are sorted lexicographically and assigned
//! dense indices `0..N`, observations are sorted by `(ego, alter)`, and dyads
//! by `(lo, hi)`. Incomplete (block) designs are supported: any subset of
//! ordered pairs may be observed, and a dyad may be observed in one direction
//! only.

mod ingest;

pub use ingest::{load_csv, CovariateTransform, IngestConfig, TransformSpec, DEFAULT_TOLERANCE};

use crate::error::{Result, SrmError};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fmt;
use std::io::Write as _;
use std::path::Path;

/// Dense node index into a dataset's roster. The label <-> index mapping is a
/// bijection maintained by [`NetworkDataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense index of an unordered dyad; `DyadIndex` of `(i, j)` and `(j, i)` are
/// identical by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadIndex(pub usize);

/// Canonical unordered pair, `lo.0 < hi.0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dyad {
    pub lo: NodeId,
    pub hi: NodeId,
}

/// One directed cell: `ego` directed `successes` of `trials` events toward
/// `alter`, with dyad covariate `covariate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectedObservation {
    pub ego: NodeId,
    pub alter: NodeId,
    pub successes: u64,
    pub trials: u64,
    pub covariate: f64,
}

/// Validated, canonically ordered dyadic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkDataset {
    labels: Vec<String>,
    observations: Vec<DirectedObservation>,
    dyads: Vec<Dyad>,
    obs_dyads: Vec<DyadIndex>,
    dyad_lookup: HashMap<(usize, usize), DyadIndex>,
    covariate_symmetric: bool,
    transform: CovariateTransform,
}

/// Raw labeled row prior to validation; `line` is the 1-based source line used
/// in error messages (line 1 is the CSV header, so data rows start at 2).
#[derive(Debug, Clone)]
pub struct RawRow {
    pub line: usize,
    pub ego: String,
    pub alter: String,
    pub successes: u64,
    pub trials: u64,
    pub covariate: f64,
}

/// Aggregate description of a dataset.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DatasetSummary {
    pub n_nodes: usize,
    pub n_observations: usize,
    pub n_dyads: usize,
    /// Fraction of dyads observed in both directions.
    pub both_directions_fraction: f64,
    pub covariate_min: f64,
    pub covariate_max: f64,
    pub covariate_mean: f64,
    pub total_trials: u64,
}

impl NetworkDataset {
    /// Validate and canonicalize raw rows into a dataset.
    ///
    /// Rejects self-loops, `successes > trials`, zero trials, non-finite
    /// covariates, duplicate ordered pairs, and covariates that differ between
    /// the two directions of a dyad by more than `tolerance`. When both
    /// directions are present, the stored covariate is taken from the
    /// low-to-high direction so the value is tied to the dyad.
    pub fn from_raw_rows(
        rows: Vec<RawRow>,
        transform: TransformSpec,
        tolerance: f64,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(SrmError::EmptyDataset);
        }

        for row in &rows {
            if row.ego == row.alter {
                return Err(SrmError::SelfLoop {
                    line: row.line,
                    label: row.ego.clone(),
                });
            }
            if row.trials == 0 {
                return Err(SrmError::ZeroTrials { line: row.line });
            }
            if row.successes > row.trials {
                return Err(SrmError::SuccessesExceedTrials {
                    line: row.line,
                    successes: row.successes,
                    trials: row.trials,
                });
            }
            if !row.covariate.is_finite() {
                return Err(SrmError::NonFiniteCovariate { line: row.line });
            }
        }

        let mut labels: Vec<String> = rows
            .iter()
            .flat_map(|r| [r.ego.clone(), r.alter.clone()])
            .collect();
        labels.sort();
        labels.dedup();
        let index_of: HashMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();

        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        let mut observations: Vec<DirectedObservation> = Vec::with_capacity(rows.len());
        for row in &rows {
            let ego = NodeId(index_of[row.ego.as_str()]);
            let alter = NodeId(index_of[row.alter.as_str()]);
            if seen.insert((ego.0, alter.0), row.line).is_some() {
                return Err(SrmError::DuplicatePair {
                    line: row.line,
                    ego: row.ego.clone(),
                    alter: row.alter.clone(),
                });
            }
            observations.push(DirectedObservation {
                ego,
                alter,
                successes: row.successes,
                trials: row.trials,
                covariate: row.covariate,
            });
        }
        observations.sort_by_key(|o| (o.ego.0, o.alter.0));

        // Dyad roster over unordered pairs present in the data.
        let mut pairs: Vec<(usize, usize)> = observations
            .iter()
            .map(|o| (o.ego.0.min(o.alter.0), o.ego.0.max(o.alter.0)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        let dyads: Vec<Dyad> = pairs
            .iter()
            .map(|&(lo, hi)| Dyad {
                lo: NodeId(lo),
                hi: NodeId(hi),
            })
            .collect();
        let dyad_lookup: HashMap<(usize, usize), DyadIndex> = pairs
            .iter()
            .enumerate()
            .map(|(id, &p)| (p, DyadIndex(id)))
            .collect();

        // Covariate symmetry within each dyad, then canonicalize to the
        // low-to-high direction's value.
        let mut dyad_cov: Vec<Option<f64>> = vec![None; dyads.len()];
        for obs in &observations {
            if obs.ego.0 < obs.alter.0 {
                let id = dyad_lookup[&(obs.ego.0, obs.alter.0)];
                dyad_cov[id.0] = Some(obs.covariate);
            }
        }
        for obs in &observations {
            let key = (obs.ego.0.min(obs.alter.0), obs.ego.0.max(obs.alter.0));
            let id = dyad_lookup[&key];
            match dyad_cov[id.0] {
                Some(x_lo) => {
                    if (obs.covariate - x_lo).abs() > tolerance {
                        return Err(SrmError::AsymmetricCovariate {
                            a: labels[key.0].clone(),
                            b: labels[key.1].clone(),
                            x_ab: x_lo,
                            x_ba: obs.covariate,
                            tolerance,
                        });
                    }
                }
                None => dyad_cov[id.0] = Some(obs.covariate),
            }
        }
        let mut obs_dyads = Vec::with_capacity(observations.len());
        for obs in &mut observations {
            let key = (obs.ego.0.min(obs.alter.0), obs.ego.0.max(obs.alter.0));
            let id = dyad_lookup[&key];
            obs.covariate = dyad_cov[id.0].expect("every observed dyad has a covariate");
            obs_dyads.push(id);
        }

        let applied = ingest::apply_transform(&mut observations, &dyads, &dyad_cov, transform)?;

        Ok(NetworkDataset {
            labels,
            observations,
            dyads,
            obs_dyads,
            dyad_lookup,
            covariate_symmetric: true,
            transform: applied,
        })
    }

    /// Build a dataset from `(ego, alter, successes, trials, covariate)`
    /// tuples. Handy for programmatic construction and tests.
    pub fn from_rows(rows: &[(&str, &str, u64, u64, f64)]) -> Result<Self> {
        let raw = rows
            .iter()
            .enumerate()
            .map(|(i, &(ego, alter, successes, trials, covariate))| RawRow {
                line: i + 2,
                ego: ego.to_string(),
                alter: alter.to_string(),
                successes,
                trials,
                covariate,
            })
            .collect();
        Self::from_raw_rows(raw, TransformSpec::None, ingest::DEFAULT_TOLERANCE)
    }

    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn n_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn n_dyads(&self) -> usize {
        self.dyads.len()
    }

    pub fn observations(&self) -> &[DirectedObservation] {
        &self.observations
    }

    pub fn dyads(&self) -> &[Dyad] {
        &self.dyads
    }

    pub fn node_labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node_label(&self, id: NodeId) -> &str {
        &self.labels[id.0]
    }

    /// Looks up a node's dense index by label.
    pub fn node_id(&self, label: &str) -> Result<NodeId> {
        self.labels
            .binary_search_by(|l| l.as_str().cmp(label))
            .map(NodeId)
            .map_err(|_| SrmError::UnknownNode(label.to_string()))
    }

    /// Symmetric dyad index of the unordered pair `(i, j)`: identical under
    /// argument swap. Errors on self-pairs and on dyads not present in the
    /// dataset.
    pub fn dyad_of(&self, i: NodeId, j: NodeId) -> Result<DyadIndex> {
        if i == j {
            return Err(SrmError::SelfPair(self.labels[i.0].clone()));
        }
        let key = (i.0.min(j.0), i.0.max(j.0));
        self.dyad_lookup.get(&key).copied().ok_or_else(|| {
            SrmError::UnobservedDyad(self.labels[key.0].clone(), self.labels[key.1].clone())
        })
    }

    /// Dyad index of the observation at position `m` (observations are in
    /// canonical `(ego, alter)` order).
    pub fn obs_dyad(&self, m: usize) -> DyadIndex {
        self.obs_dyads[m]
    }

    /// The covariate transform applied at ingest (identity unless requested).
    pub fn transform(&self) -> &CovariateTransform {
        &self.transform
    }

    /// Whether dyad covariate symmetry was validated (always true for a
    /// successfully constructed dataset).
    pub fn covariate_symmetric(&self) -> bool {
        self.covariate_symmetric
    }

    pub fn summarize(&self) -> DatasetSummary {
        let mut per_dyad_count = vec![0usize; self.dyads.len()];
        for id in &self.obs_dyads {
            per_dyad_count[id.0] += 1;
        }
        let both = per_dyad_count.iter().filter(|&&c| c == 2).count();
        let m = self.observations.len();
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        let mut total_trials = 0u64;
        for obs in &self.observations {
            lo = lo.min(obs.covariate);
            hi = hi.max(obs.covariate);
            sum += obs.covariate;
            total_trials += obs.trials;
        }
        DatasetSummary {
            n_nodes: self.labels.len(),
            n_observations: m,
            n_dyads: self.dyads.len(),
            both_directions_fraction: both as f64 / self.dyads.len() as f64,
            covariate_min: lo,
            covariate_max: hi,
            covariate_mean: sum / m as f64,
            total_trials,
        }
    }

    /// Serialize in the canonical CSV schema (`ego,alter,successes,trials,covariate`).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("ego,alter,successes,trials,covariate\n");
        for obs in &self.observations {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.labels[obs.ego.0],
                self.labels[obs.alter.0],
                obs.successes,
                obs.trials,
                obs.covariate
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    /// Content fingerprint: SHA-256 of the canonical CSV serialization, so it
    /// is stable under input row reordering.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_csv_string().as_bytes());
        hex::encode(hasher.finalize())
    }
}
