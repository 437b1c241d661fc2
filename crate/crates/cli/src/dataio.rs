//! Dataset resolution: synthetic blobs derived from the run seed, or IDX
//! files from a directory, each with provenance recorded for the manifest.

use std::collections::BTreeMap;
use std::path::PathBuf;

use isoprune_core::data::{idx_dir_paths, load_idx_dir, synthetic_blobs, Dataset};
use isoprune_core::Rng;

use crate::config::{Config, DATA_DIR_ENV};
use crate::error::{CliError, Result};
use crate::manifest::{sha256_hex, DataProvenance};

/// Seed streams, split from the base seed so stages never share a sequence.
pub mod streams {
    pub const DATA_TRAIN: u64 = 1;
    pub const DATA_EVAL: u64 = 2;
    pub const INIT: u64 = 3;
    pub const REINIT: u64 = 4;
    pub const TRAIN: u64 = 5;
    /// Base for per-cell streams in sweeps; cells use `CELL + cell_index`.
    pub const CELL: u64 = 1000;
}

/// Rng for a named stage of a run.
pub fn stage_rng(seed: u64, stream: u64) -> Rng {
    Rng::new(seed).split(stream)
}

pub struct DataBundle {
    pub train: Dataset,
    pub eval: Dataset,
    pub provenance: DataProvenance,
}

/// Loads or generates the datasets named by the config and checks they fit
/// the requested input and output dimensions.
pub fn resolve_data(config: &Config, input_dim: usize, n_classes: usize) -> Result<DataBundle> {
    let bundle = match config.data.as_str() {
        "blobs" => blobs(config, input_dim, n_classes)?,
        "idx" => idx(config)?,
        other => {
            return Err(CliError::Flag {
                field: "data",
                detail: format!("{other:?} is not blobs or idx"),
            })
        }
    };
    if bundle.train.dim() != input_dim || bundle.train.n_classes != n_classes {
        return Err(CliError::Flag {
            field: "net",
            detail: format!(
                "network expects {} inputs and {} classes, data has {} and {}",
                input_dim,
                n_classes,
                bundle.train.dim(),
                bundle.train.n_classes
            ),
        });
    }
    Ok(bundle)
}

fn blobs(config: &Config, dim: usize, classes: usize) -> Result<DataBundle> {
    let train = synthetic_blobs(
        config.blob_train_per_class,
        classes,
        dim,
        config.blob_spread,
        &mut stage_rng(config.seed, streams::DATA_TRAIN),
    )?;
    let eval = synthetic_blobs(
        config.blob_eval_per_class,
        classes,
        dim,
        config.blob_spread,
        &mut stage_rng(config.seed, streams::DATA_EVAL),
    )?;
    let provenance = DataProvenance {
        source: "blobs".to_string(),
        detail: format!("seed={} spread={}", config.seed, config.blob_spread),
        train_examples: train.len(),
        eval_examples: eval.len(),
        input_dim: dim,
        n_classes: classes,
        sha256: BTreeMap::new(),
    };
    Ok(DataBundle {
        train,
        eval,
        provenance,
    })
}

fn idx(config: &Config) -> Result<DataBundle> {
    let dir: PathBuf = config
        .data_dir
        .clone()
        .or_else(|| std::env::var(DATA_DIR_ENV).ok())
        .map(PathBuf::from)
        .ok_or(CliError::DataDirMissing)?;
    let (train, eval) = load_idx_dir(&dir)?;
    let mut sha256 = BTreeMap::new();
    let (ti, tl, vi, vl) = idx_dir_paths(&dir);
    for path in [ti, tl, vi, vl] {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        sha256.insert(name, sha256_hex(&path)?);
    }
    let provenance = DataProvenance {
        source: "idx".to_string(),
        detail: dir.display().to_string(),
        train_examples: train.len(),
        eval_examples: eval.len(),
        input_dim: train.dim(),
        n_classes: train.n_classes,
        sha256,
    };
    Ok(DataBundle {
        train,
        eval,
        provenance,
    })
}
