//! CSV ingestion and covariate transforms.

use super::{Dyad, DirectedObservation, NetworkDataset, RawRow};
use crate::error::{Result, SrmError};
use std::path::Path;

/// Default absolute tolerance for within-dyad covariate agreement.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Requested covariate transform, applied at ingest after validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformSpec {
    #[default]
    None,
    /// Subtract the dyad-level mean.
    Center,
    /// Subtract the dyad-level mean and divide by the dyad-level sample
    /// standard deviation.
    Standardize,
}

impl std::str::FromStr for TransformSpec {
    type Err = SrmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TransformSpec::None),
            "center" => Ok(TransformSpec::Center),
            "standardize" => Ok(TransformSpec::Standardize),
            other => Err(SrmError::InvalidInput(format!(
                "unknown covariate transform `{other}` (expected none, center, or standardize)"
            ))),
        }
    }
}

/// Record of the transform actually applied, with the constants needed to map
/// between the original and model scales.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CovariateTransform {
    None,
    Center { mean: f64 },
    Standardize { mean: f64, sd: f64 },
}

impl CovariateTransform {
    /// Map a covariate value from the original scale to the model scale.
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            CovariateTransform::None => x,
            CovariateTransform::Center { mean } => x - mean,
            CovariateTransform::Standardize { mean, sd } => (x - mean) / sd,
        }
    }
}

/// Column names and options for [`load_csv`].
#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub ego_column: String,
    pub alter_column: String,
    pub successes_column: String,
    pub trials_column: String,
    pub covariate_column: String,
    pub transform: TransformSpec,
    /// Absolute tolerance for within-dyad covariate agreement.
    pub symmetry_tolerance: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            ego_column: "ego".into(),
            alter_column: "alter".into(),
            successes_column: "successes".into(),
            trials_column: "trials".into(),
            covariate_column: "covariate".into(),
            transform: TransformSpec::None,
            symmetry_tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// Load a directed dyadic dataset from a headered CSV file.
///
/// The default schema is `ego,alter,successes,trials,covariate`; column names
/// can be remapped through [`IngestConfig`]. Extra columns are ignored and
/// column order is irrelevant. Malformed rows are reported with their
/// 1-based line number.
pub fn load_csv(path: &Path, config: &IngestConfig) -> Result<NetworkDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;

    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| SrmError::MissingColumn(name.to_string()))
    };
    let ego_col = col(&config.ego_column)?;
    let alter_col = col(&config.alter_column)?;
    let successes_col = col(&config.successes_column)?;
    let trials_col = col(&config.trials_column)?;
    let covariate_col = col(&config.covariate_column)?;

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(rows.len() + 2);
        let field = |idx: usize| -> Result<&str> {
            record.get(idx).ok_or_else(|| SrmError::MalformedRow {
                line,
                message: "row has fewer fields than the header".into(),
            })
        };
        let parse_count = |idx: usize, name: &str| -> Result<u64> {
            let raw = field(idx)?;
            raw.parse::<u64>().map_err(|_| SrmError::MalformedRow {
                line,
                message: format!("{name} `{raw}` is not a non-negative integer"),
            })
        };
        let ego = field(ego_col)?.to_string();
        let alter = field(alter_col)?.to_string();
        if ego.is_empty() || alter.is_empty() {
            return Err(SrmError::MalformedRow {
                line,
                message: "empty node label".into(),
            });
        }
        let successes = parse_count(successes_col, "successes")?;
        let trials = parse_count(trials_col, "trials")?;
        let raw_cov = field(covariate_col)?;
        let covariate = raw_cov.parse::<f64>().map_err(|_| SrmError::MalformedRow {
            line,
            message: format!("covariate `{raw_cov}` is not a number"),
        })?;
        rows.push(RawRow {
            line,
            ego,
            alter,
            successes,
            trials,
            covariate,
        });
    }

    NetworkDataset::from_raw_rows(rows, config.transform, config.symmetry_tolerance)
}

/// Apply the requested transform in place. Mean and standard deviation are
/// computed over dyads (each dyad counted once) since the covariate is a
/// dyad-level quantity.
pub(super) fn apply_transform(
    observations: &mut [DirectedObservation],
    dyads: &[Dyad],
    dyad_cov: &[Option<f64>],
    spec: TransformSpec,
) -> Result<CovariateTransform> {
    if let TransformSpec::None = spec {
        return Ok(CovariateTransform::None);
    }
    let d = dyads.len() as f64;
    let xs: Vec<f64> = dyad_cov.iter().map(|x| x.expect("covariate set")).collect();
    let mean = xs.iter().sum::<f64>() / d;
    let applied = match spec {
        TransformSpec::None => unreachable!(),
        TransformSpec::Center => CovariateTransform::Center { mean },
        TransformSpec::Standardize => {
            if dyads.len() < 2 {
                return Err(SrmError::InvalidInput(
                    "cannot standardize a covariate with fewer than two dyads".into(),
                ));
            }
            let ss = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
            let sd = (ss / (d - 1.0)).sqrt();
            if sd == 0.0 {
                return Err(SrmError::InvalidInput(
                    "cannot standardize a constant covariate".into(),
                ));
            }
            CovariateTransform::Standardize { mean, sd }
        }
    };
    for obs in observations.iter_mut() {
        obs.covariate = applied.apply(obs.covariate);
    }
    Ok(applied)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::io::Write;

    fn write_csv(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        (dir, path)
    }

    #[test]
    fn loads_default_schema() {
        let (_dir, path) = write_csv(
            "ego,alter,successes,trials,covariate\n\
             a,b,3,10,0.5\n\
             b,a,2,10,0.5\n",
        );
        let ds = load_csv(&path, &IngestConfig::default()).unwrap();
        assert_eq!(ds.n_observations(), 2);
        assert_eq!(ds.n_dyads(), 1);
    }

    #[test]
    fn remapped_columns_and_extras() {
        let (_dir, path) = write_csv(
            "note,sender,receiver,x,hits,n\n\
             keep,a,b,0.5,3,10\n\
             keep,b,a,0.5,2,10\n",
        );
        let config = IngestConfig {
            ego_column: "sender".into(),
            alter_column: "receiver".into(),
            successes_column: "hits".into(),
            trials_column: "n".into(),
            covariate_column: "x".into(),
            ..IngestConfig::default()
        };
        let ds = load_csv(&path, &config).unwrap();
        assert_eq!(ds.n_observations(), 2);
        assert_eq!(ds.observations()[0].successes, 3);
    }

    #[test]
    fn missing_column_named_in_error() {
        let (_dir, path) = write_csv("ego,alter,successes,trials\na,b,1,2\n");
        match load_csv(&path, &IngestConfig::default()).unwrap_err() {
            SrmError::MissingColumn(name) => assert_eq!(name, "covariate"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn malformed_count_reports_line() {
        let (_dir, path) = write_csv(
            "ego,alter,successes,trials,covariate\n\
             a,b,3,10,0.5\n\
             b,a,two,10,0.5\n",
        );
        match load_csv(&path, &IngestConfig::default()).unwrap_err() {
            SrmError::MalformedRow { line, .. } => assert_eq!(line, 3),
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_covariate_rejected() {
        let (_dir, path) = write_csv(
            "ego,alter,successes,trials,covariate\n\
             a,b,3,10,NaN\n",
        );
        assert!(matches!(
            load_csv(&path, &IngestConfig::default()).unwrap_err(),
            SrmError::NonFiniteCovariate { line: 2 }
        ));
    }

    #[test]
    fn center_and_standardize_use_dyad_level_moments() {
        let (_dir, path) = write_csv(
            "ego,alter,successes,trials,covariate\n\
             a,b,1,5,1.0\n\
             b,a,1,5,1.0\n\
             a,c,1,5,3.0\n\
             b,c,1,5,5.0\n",
        );
        let config = IngestConfig {
            transform: TransformSpec::Standardize,
            ..IngestConfig::default()
        };
        let ds = load_csv(&path, &config).unwrap();
        // Dyad covariates are {1, 3, 5}: mean 3, sample sd 2.
        match *ds.transform() {
            CovariateTransform::Standardize { mean, sd } => {
                assert_abs_diff_eq!(mean, 3.0, epsilon = 1e-12);
                assert_abs_diff_eq!(sd, 2.0, epsilon = 1e-12);
            }
            ref other => panic!("expected Standardize, got {other:?}"),
        }
        let xs: Vec<f64> = ds.observations().iter().map(|o| o.covariate).collect();
        // Canonical order: (a,b), (a,c), (b,a), (b,c).
        assert_eq!(xs, vec![-1.0, 0.0, -1.0, 1.0]);
    }

    #[test]
    fn standardize_constant_covariate_errors() {
        let (_dir, path) = write_csv(
            "ego,alter,successes,trials,covariate\n\
             a,b,1,5,2.0\n\
             a,c,1,5,2.0\n",
        );
        let config = IngestConfig {
            transform: TransformSpec::Standardize,
            ..IngestConfig::default()
        };
        assert!(load_csv(&path, &config).is_err());
    }
}
