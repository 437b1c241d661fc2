//! Run configuration with three-level precedence: profile defaults, then a
//! flat JSON config file, then command-line flags. The fully resolved value
//! is frozen into the run manifest, so a manifest alone can replay a run.

use std::fs;
use std::path::Path;

use clap::Args;
use serde::{Deserialize, Serialize};

use isoprune_core::init::{InitScheme, InitSpec};
use isoprune_core::network::{NetworkConfig, Nonlinearity};
use isoprune_core::saliency::LossKind;
use isoprune_core::trainer::TrainConfig;

use crate::error::{CliError, Result};

pub const PROFILE_CI: &str = "ci";
pub const PROFILE_FULL: &str = "full";
pub const PROFILE_ENV: &str = "ISOPRUNE_PROFILE";
pub const DATA_DIR_ENV: &str = "ISOPRUNE_DATA_DIR";

/// Optional overrides, either parsed from flags or deserialized from the
/// JSON config file. Unset fields fall through to the next layer.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    /// Execution profile: `ci` (small synthetic runs) or `full`.
    #[arg(long)]
    pub profile: Option<String>,
    /// Architecture, e.g. `mlp:784,100,100,10`.
    #[arg(long)]
    pub net: Option<String>,
    /// Nonlinearity: linear, tanh, or relu.
    #[arg(long)]
    pub act: Option<String>,
    /// Initialization: scaled_gaussian, vs_lecun, vs_glorot, vs_he,
    /// orthogonal.
    #[arg(long)]
    pub init: Option<String>,
    /// Weight standard deviation for scaled_gaussian.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Bias standard deviation.
    #[arg(long)]
    pub sigma_b: Option<f64>,
    /// Fraction of weights to prune, in [0, 1).
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Saliency loss: gt, uniform, pred_raw, or pred_softmax.
    #[arg(long)]
    pub loss: Option<String>,
    /// Base seed; all per-stage seeds derive from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seeds per cell for multi-seed commands.
    #[arg(long)]
    pub n_seeds: Option<usize>,
    /// Dataset source: blobs (synthetic) or idx (files).
    #[arg(long)]
    pub data: Option<String>,
    /// Directory holding IDX files; overrides ISOPRUNE_DATA_DIR.
    #[arg(long)]
    pub data_dir: Option<String>,
    /// Synthetic training examples per class.
    #[arg(long)]
    pub blob_train_per_class: Option<usize>,
    /// Synthetic evaluation examples per class.
    #[arg(long)]
    pub blob_eval_per_class: Option<usize>,
    /// Synthetic cluster noise standard deviation.
    #[arg(long)]
    pub blob_spread: Option<f64>,
    /// Internal batch size for sensitivity accumulation.
    #[arg(long)]
    pub saliency_batch: Option<usize>,
    /// Examples pooled into each Jacobian spectrum.
    #[arg(long)]
    pub spectrum_examples: Option<usize>,
    /// Initial learning rate.
    #[arg(long)]
    pub lr0: Option<f64>,
    /// Momentum coefficient.
    #[arg(long)]
    pub momentum: Option<f64>,
    /// Iterations between learning-rate decays.
    #[arg(long)]
    pub decay_every: Option<usize>,
    /// Multiplicative learning-rate decay factor.
    #[arg(long)]
    pub decay_factor: Option<f64>,
    /// Total training iterations.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Minibatch size.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Iterations between evaluations.
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Reinitialize weights after pruning, before training.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub reinit: Option<bool>,
    /// Scheme used when reinitializing.
    #[arg(long)]
    pub reinit_init: Option<String>,
    /// Hidden width for grid-built networks.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Depth grid for sweeps, e.g. `3,5,7`.
    #[arg(long, value_delimiter = ',')]
    pub depths: Option<Vec<usize>>,
    /// Gamma grid for sweeps.
    #[arg(long, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    /// Oversized architecture for sculpt, same syntax as --net.
    #[arg(long)]
    pub big_net: Option<String>,
}

macro_rules! overlay_fields {
    ($src:expr, $dst:expr, $($field:ident),+ $(,)?) => {
        $(if let Some(v) = &$src.$field {
            $dst.$field = v.clone();
        })+
    };
}

impl Overrides {
    fn overlay(&self, base: &mut Config) {
        overlay_fields!(
            self, base, net, act, init, gamma, sigma_b, kappa, loss, seed, n_seeds, data,
            blob_train_per_class, blob_eval_per_class, blob_spread, saliency_batch,
            spectrum_examples, lr0, momentum, decay_every, decay_factor, max_iters, batch_size,
            eval_every, reinit, reinit_init, hidden, depths, gammas,
        );
        if self.data_dir.is_some() {
            base.data_dir = self.data_dir.clone();
        }
        if self.big_net.is_some() {
            base.big_net = self.big_net.clone();
        }
    }
}

/// Fully resolved run configuration; every run is a pure function of this
/// struct plus the data files it names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub profile: String,
    pub net: String,
    pub act: String,
    pub init: String,
    pub gamma: f64,
    pub sigma_b: f64,
    pub kappa: f64,
    pub loss: String,
    pub seed: u64,
    pub n_seeds: usize,
    pub data: String,
    pub data_dir: Option<String>,
    pub blob_train_per_class: usize,
    pub blob_eval_per_class: usize,
    pub blob_spread: f64,
    pub saliency_batch: usize,
    pub spectrum_examples: usize,
    pub lr0: f64,
    pub momentum: f64,
    pub decay_every: usize,
    pub decay_factor: f64,
    pub max_iters: usize,
    pub batch_size: usize,
    pub eval_every: usize,
    pub reinit: bool,
    pub reinit_init: String,
    pub hidden: usize,
    pub depths: Vec<usize>,
    pub gammas: Vec<f64>,
    pub big_net: Option<String>,
}

impl Config {
    pub fn defaults(profile: &str) -> Result<Config> {
        let ci = match profile {
            PROFILE_CI => true,
            PROFILE_FULL => false,
            other => {
                return Err(CliError::Flag {
                    field: "profile",
                    detail: format!("{other:?} is not ci or full"),
                })
            }
        };
        Ok(Config {
            profile: profile.to_string(),
            net: "mlp:784,100,100,10".to_string(),
            act: "tanh".to_string(),
            init: "vs_glorot".to_string(),
            gamma: 1.0,
            sigma_b: 0.0,
            kappa: 0.9,
            loss: "gt".to_string(),
            seed: 42,
            n_seeds: 1,
            data: if ci { "blobs" } else { "idx" }.to_string(),
            data_dir: None,
            blob_train_per_class: 400,
            blob_eval_per_class: 100,
            blob_spread: 0.12,
            saliency_batch: 1000,
            spectrum_examples: if ci { 32 } else { 128 },
            lr0: if ci { 0.05 } else { 0.1 },
            momentum: 0.9,
            decay_every: if ci { 600 } else { 20_000 },
            decay_factor: 0.1,
            max_iters: if ci { 1500 } else { 80_000 },
            batch_size: 100,
            eval_every: if ci { 100 } else { 1000 },
            reinit: false,
            reinit_init: "vs_glorot".to_string(),
            hidden: 100,
            depths: vec![3, 5, 7],
            gammas: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0],
            big_net: None,
        })
    }

    /// Resolves profile defaults, then the config file, then flags.
    pub fn resolve(file: Option<&Path>, flags: &Overrides) -> Result<Config> {
        let from_file: Overrides = match file {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Config {
                    path: path.to_path_buf(),
                    detail: e.to_string(),
                })?;
                serde_json::from_str(&text).map_err(|e| CliError::Config {
                    path: path.to_path_buf(),
                    detail: e.to_string(),
                })?
            }
            None => Overrides::default(),
        };
        let profile = flags
            .profile
            .clone()
            .or_else(|| from_file.profile.clone())
            .or_else(|| std::env::var(PROFILE_ENV).ok())
            .unwrap_or_else(|| PROFILE_CI.to_string());
        let mut config = Config::defaults(&profile)?;
        from_file.overlay(&mut config);
        flags.overlay(&mut config);
        config.profile = profile;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        parse_net(&self.net)?;
        if let Some(big) = &self.big_net {
            parse_net(big)?;
        }
        self.nonlinearity()?;
        self.init_scheme()?;
        self.loss_kind()?;
        let flag = |field: &'static str, detail: String| CliError::Flag { field, detail };
        if !(0.0..1.0).contains(&self.kappa) {
            return Err(flag("kappa", format!("{} outside [0, 1)", self.kappa)));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(flag("gamma", format!("{} must be finite and >= 0", self.gamma)));
        }
        if !(self.sigma_b.is_finite() && self.sigma_b >= 0.0) {
            return Err(flag("sigma_b", format!("{} must be finite and >= 0", self.sigma_b)));
        }
        match self.data.as_str() {
            "blobs" | "idx" => {}
            other => return Err(flag("data", format!("{other:?} is not blobs or idx"))),
        }
        if self.n_seeds == 0 {
            return Err(flag("n_seeds", "must be at least 1".to_string()));
        }
        if self.hidden == 0 {
            return Err(flag("hidden", "must be positive".to_string()));
        }
        if self.depths.is_empty() || self.depths.iter().any(|&k| k < 2) {
            return Err(flag("depths", format!("{:?} must all be >= 2", self.depths)));
        }
        if self.gammas.is_empty()
            || self.gammas.iter().any(|g| !(g.is_finite() && *g > 0.0))
        {
            return Err(flag("gammas", format!("{:?} must all be positive", self.gammas)));
        }
        if self.saliency_batch == 0 || self.spectrum_examples == 0 {
            return Err(flag(
                "saliency_batch",
                "saliency_batch and spectrum_examples must be positive".to_string(),
            ));
        }
        self.reinit_scheme()?;
        self.train_config().validate().map_err(CliError::Core)?;
        Ok(())
    }

    pub fn network(&self) -> Result<NetworkConfig> {
        let widths = parse_net(&self.net)?;
        NetworkConfig::new(widths, self.nonlinearity()?).map_err(CliError::Core)
    }

    pub fn big_network(&self) -> Result<NetworkConfig> {
        let spec = self.big_net.as_ref().ok_or(CliError::Flag {
            field: "big_net",
            detail: "required for sculpt".to_string(),
        })?;
        NetworkConfig::new(parse_net(spec)?, self.nonlinearity()?).map_err(CliError::Core)
    }

    /// Widths for a grid-built network of `k` weight layers.
    pub fn grid_widths(&self, k: usize, input_dim: usize, n_classes: usize) -> Vec<usize> {
        let mut widths = vec![input_dim];
        widths.extend(std::iter::repeat(self.hidden).take(k - 1));
        widths.push(n_classes);
        widths
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        self.act.parse().map_err(CliError::Core)
    }

    pub fn loss_kind(&self) -> Result<LossKind> {
        self.loss.parse().map_err(CliError::Core)
    }

    pub fn init_scheme(&self) -> Result<InitScheme> {
        parse_scheme(&self.init, self.gamma)
    }

    pub fn reinit_scheme(&self) -> Result<InitScheme> {
        parse_scheme(&self.reinit_init, self.gamma)
    }

    pub fn init_spec(&self, seed: u64) -> Result<InitSpec> {
        let mut spec = InitSpec::new(self.init_scheme()?, seed);
        spec.sigma_b = self.sigma_b;
        Ok(spec)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr0: self.lr0,
            momentum: self.momentum,
            decay_every: self.decay_every,
            decay_factor: self.decay_factor,
            max_iters: self.max_iters,
            batch_size: self.batch_size,
            eval_every: self.eval_every,
        }
    }
}

/// Parses `mlp:784,100,100,10` into layer widths.
pub fn parse_net(spec: &str) -> Result<Vec<usize>> {
    let body = spec.strip_prefix("mlp:").ok_or_else(|| CliError::Flag {
        field: "net",
        detail: format!("{spec:?} must start with mlp:"),
    })?;
    let widths: Vec<usize> = body
        .split(',')
        .map(|w| {
            w.trim().parse::<usize>().map_err(|_| CliError::Flag {
                field: "net",
                detail: format!("{w:?} is not a positive width"),
            })
        })
        .collect::<Result<_>>()?;
    if widths.len() < 2 || widths.contains(&0) {
        return Err(CliError::Flag {
            field: "net",
            detail: format!("{spec:?} needs at least two positive widths"),
        });
    }
    Ok(widths)
}

fn parse_scheme(name: &str, gamma: f64) -> Result<InitScheme> {
    match name {
        "scaled_gaussian" => Ok(InitScheme::ScaledGaussian { gamma }),
        "vs_lecun" => Ok(InitScheme::VsLecun),
        "vs_glorot" => Ok(InitScheme::VsGlorot),
        "vs_he" => Ok(InitScheme::VsHe),
        "orthogonal" => Ok(InitScheme::Orthogonal),
        other => Err(CliError::Flag {
            field: "init",
            detail: format!(
                "{other:?} is not scaled_gaussian|vs_lecun|vs_glorot|vs_he|orthogonal"
            ),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(json: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(json.as_bytes()).unwrap();
        f
    }

    #[test]
    fn defaults_differ_by_profile() {
        let ci = Config::defaults(PROFILE_CI).unwrap();
        let full = Config::defaults(PROFILE_FULL).unwrap();
        assert_eq!(ci.data, "blobs");
        assert_eq!(full.data, "idx");
        assert!(ci.max_iters < full.max_iters);
        assert!(Config::defaults("quick").is_err());
    }

    #[test]
    fn flags_override_file_overrides_defaults() {
        let file = write_config(r#"{"kappa": 0.5, "seed": 7, "act": "relu"}"#);
        let flags = Overrides {
            kappa: Some(0.8),
            ..Overrides::default()
        };
        let config = Config::resolve(Some(file.path()), &flags).unwrap();
        assert_eq!(config.kappa, 0.8);
        assert_eq!(config.seed, 7);
        assert_eq!(config.act, "relu");
        assert_eq!(config.loss, "gt");
    }

    #[test]
    fn unknown_config_fields_are_rejected_by_name() {
        let file = write_config(r#"{"kapa": 0.5}"#);
        let err = Config::resolve(Some(file.path()), &Overrides::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("kapa"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn net_parser_accepts_mlp_syntax_only() {
        assert_eq!(parse_net("mlp:784,100,10").unwrap(), vec![784, 100, 10]);
        assert_eq!(parse_net("mlp: 4, 3").unwrap(), vec![4, 3]);
        assert!(parse_net("784,100,10").is_err());
        assert!(parse_net("mlp:784").is_err());
        assert!(parse_net("mlp:784,0,10").is_err());
        assert!(parse_net("mlp:784,ten").is_err());
    }

    #[test]
    fn validation_rejects_out_of_range_values() {
        let mut config = Config::defaults(PROFILE_CI).unwrap();
        config.kappa = 1.0;
        assert!(config.validate().is_err());
        let mut config = Config::defaults(PROFILE_CI).unwrap();
        config.loss = "hinge".to_string();
        assert!(config.validate().is_err());
        let mut config = Config::defaults(PROFILE_CI).unwrap();
        config.gammas = vec![0.0];
        assert!(config.validate().is_err());
        let mut config = Config::defaults(PROFILE_CI).unwrap();
        config.momentum = 1.5;
        assert!(config.validate().is_err());
    }

    #[test]
    fn grid_widths_repeat_hidden_layers() {
        let config = Config::defaults(PROFILE_CI).unwrap();
        assert_eq!(config.grid_widths(3, 784, 10), vec![784, 100, 100, 10]);
        assert_eq!(
            config.grid_widths(7, 784, 10),
            vec![784, 100, 100, 100, 100, 100, 100, 10]
        );
        assert_eq!(config.grid_widths(2, 6, 3), vec![6, 100, 3]);
    }

    #[test]
    fn resolved_config_round_trips_through_json() {
        let config = Config::defaults(PROFILE_CI).unwrap();
        let json = serde_json::to_string_pretty(&config).unwrap();
        let back: Config = serde_json::from_str(&json).unwrap();
        assert_eq!(config, back);
    }
}
