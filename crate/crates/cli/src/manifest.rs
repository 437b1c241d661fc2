//! Run manifests: the frozen record of a run's resolved configuration, data
//! provenance, solver diagnostics, and output files. A manifest is enough to
//! re-execute the run and compare every output byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use isoprune_core::meanfield::MeanFieldSolution;

use crate::config::Config;
use crate::error::{CliError, Result};

pub const MANIFEST_FORMAT: &str = "isoprune.manifest.v1";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Where the datasets came from, precisely enough to detect drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataProvenance {
    /// `blobs` or `idx`.
    pub source: String,
    /// Seed description for blobs, directory path for idx.
    pub detail: String,
    pub train_examples: usize,
    pub eval_examples: usize,
    pub input_dim: usize,
    pub n_classes: usize,
    /// Per-file SHA-256 of idx inputs; empty for synthetic data.
    pub sha256: BTreeMap<String, String>,
}

impl DataProvenance {
    /// Provenance for commands that touch no dataset.
    pub fn none() -> Self {
        DataProvenance {
            source: "none".to_string(),
            detail: String::new(),
            train_examples: 0,
            eval_examples: 0,
            input_dim: 0,
            n_classes: 0,
            sha256: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub command: String,
    /// Wall-clock creation time; ignored when comparing replays.
    pub created_unix: u64,
    pub config: Config,
    pub data: DataProvenance,
    /// Critical-scale solution when the run solved one (orthogonal init or
    /// the meanfield command).
    pub diagnostics: Option<MeanFieldSolution>,
    /// Output files, relative to the manifest's directory, in write order.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: &Config,
        data: DataProvenance,
        diagnostics: Option<MeanFieldSolution>,
        outputs: Vec<String>,
    ) -> Self {
        let created_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            format: MANIFEST_FORMAT.to_string(),
            command: command.to_string(),
            created_unix,
            config: config.clone(),
            data,
            diagnostics,
            outputs,
        }
    }

    /// Writes `manifest.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<RunManifest> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Manifest {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        let manifest: RunManifest =
            serde_json::from_str(&text).map_err(|e| CliError::Manifest {
                path: path.to_path_buf(),
                detail: e.to_string(),
            })?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(CliError::Manifest {
                path: path.to_path_buf(),
                detail: format!(
                    "format {:?}, this build reads {MANIFEST_FORMAT:?}",
                    manifest.format
                ),
            });
        }
        Ok(manifest)
    }

    /// Equality ignoring the creation timestamp.
    pub fn matches_ignoring_timestamp(&self, other: &RunManifest) -> bool {
        let strip = |m: &RunManifest| {
            let mut v = serde_json::to_value(m).expect("manifest serializes");
            v.as_object_mut().expect("manifest is an object").remove("created_unix");
            v
        };
        strip(self) == strip(other)
    }
}

/// SHA-256 of a file, lowercase hex.
pub fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    Ok(hex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PROFILE_CI;

    fn sample() -> RunManifest {
        RunManifest::new(
            "prune",
            &Config::defaults(PROFILE_CI).unwrap(),
            DataProvenance {
                source: "blobs".to_string(),
                detail: "seed=42".to_string(),
                train_examples: 4000,
                eval_examples: 1000,
                input_dim: 784,
                n_classes: 10,
                sha256: BTreeMap::new(),
            },
            None,
            vec!["prune_report.json".to_string()],
        )
    }

    #[test]
    fn round_trips_and_checks_format() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = sample();
        let path = manifest.save(dir.path()).unwrap();
        let back = RunManifest::load(&path).unwrap();
        assert!(manifest.matches_ignoring_timestamp(&back));
        assert_eq!(back.command, "prune");

        let mut broken = manifest.clone();
        broken.format = "isoprune.manifest.v9".to_string();
        let bad_path = dir.path().join("bad.json");
        std::fs::write(&bad_path, serde_json::to_string(&broken).unwrap()).unwrap();
        assert!(RunManifest::load(&bad_path).is_err());
    }

    #[test]
    fn timestamp_is_ignored_but_config_is_not() {
        let mut a = sample();
        let mut b = a.clone();
        b.created_unix = a.created_unix + 100;
        assert!(a.matches_ignoring_timestamp(&b));
        a.config.seed = 7;
        assert!(!a.matches_ignoring_timestamp(&b));
    }

    #[test]
    fn sha256_matches_known_vector() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x");
        std::fs::write(&path, b"abc").unwrap();
        assert_eq!(
            sha256_hex(&path).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
