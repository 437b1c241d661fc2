//! Weight initialization schemes.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::decomp::qr_orthonormal;
use crate::meanfield::{meanfield_solve, MeanFieldSolution, DEFAULT_NODES};
use crate::network::{NetworkConfig, NetworkParams};
use crate::rng::Rng;

/// How weight matrices are drawn.
///
/// `ScaledGaussian` uses one global standard deviation `gamma` for every
/// layer. The variance-scaled family divides by fan terms per layer, and
/// `Orthogonal` draws a Gaussian matrix, orthonormalizes it (columns when
/// tall, rows when wide), and multiplies by the critical `sigma_w` from the
/// mean-field solver, giving exact layerwise isometry up to that scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum InitScheme {
    ScaledGaussian { gamma: f64 },
    VsLecun,
    VsGlorot,
    VsHe,
    Orthogonal,
}

impl InitScheme {
    pub fn name(&self) -> &'static str {
        match self {
            InitScheme::ScaledGaussian { .. } => "scaled_gaussian",
            InitScheme::VsLecun => "vs_lecun",
            InitScheme::VsGlorot => "vs_glorot",
            InitScheme::VsHe => "vs_he",
            InitScheme::Orthogonal => "orthogonal",
        }
    }

    /// Per-layer weight standard deviation for the Gaussian schemes.
    fn layer_std(&self, fan_in: usize, fan_out: usize) -> f64 {
        match self {
            InitScheme::ScaledGaussian { gamma } => *gamma,
            InitScheme::VsLecun => (1.0 / fan_in as f64).sqrt(),
            InitScheme::VsGlorot => (2.0 / (fan_in + fan_out) as f64).sqrt(),
            InitScheme::VsHe => (2.0 / fan_in as f64).sqrt(),
            InitScheme::Orthogonal => unreachable!("orthogonal layers are not std-scaled draws"),
        }
    }
}

/// Full initialization recipe: scheme, bias scale, and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub scheme: InitScheme,
    pub sigma_b: f64,
    pub seed: u64,
}

impl InitSpec {
    pub fn new(scheme: InitScheme, seed: u64) -> Self {
        InitSpec {
            scheme,
            sigma_b: 0.0,
            seed,
        }
    }
}

const ORTHOGONAL_REDRAWS: usize = 8;

/// Draws network parameters according to `spec`.
///
/// Layers are filled in order, weights before biases, from a generator
/// seeded with `spec.seed`. For `ScaledGaussian` the underlying standard
/// normals do not depend on `gamma`, so two runs with the same seed and
/// different `gamma` produce exactly proportional weights.
pub fn init_network(config: &NetworkConfig, spec: &InitSpec) -> Result<NetworkParams, Error> {
    if !(spec.sigma_b >= 0.0) || !spec.sigma_b.is_finite() {
        return Err(Error::InvalidArgument {
            op: "init_network",
            detail: format!("sigma_b must be finite and non-negative, got {}", spec.sigma_b),
        });
    }
    if let InitScheme::ScaledGaussian { gamma } = spec.scheme {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument {
                op: "init_network",
                detail: format!("gamma must be finite and non-negative, got {gamma}"),
            });
        }
    }
    let meanfield = match spec.scheme {
        InitScheme::Orthogonal => Some(critical_scale(config, spec.sigma_b)?),
        _ => None,
    };
    let mut rng = Rng::new(spec.seed);
    let mut params = NetworkParams::zeros(config);
    for l in 1..=config.depth() {
        let (fan_in, fan_out) = config.layer_dims(l);
        params.weights[l - 1] = match &meanfield {
            Some(solution) => {
                let q = orthonormal_draw(fan_out, fan_in, &mut rng)?;
                q.map(|x| solution.sigma_w * x)
            }
            None => {
                let std = spec.scheme.layer_std(fan_in, fan_out);
                rng.gaussian_matrix(fan_out, fan_in, std)
            }
        };
        params.biases[l - 1] = rng.gaussian_vec(fan_out, spec.sigma_b);
    }
    Ok(params)
}

/// Critical `sigma_w` for orthogonal layers under this architecture's
/// nonlinearity, exposed separately so callers can record the solution.
pub fn critical_scale(config: &NetworkConfig, sigma_b: f64) -> Result<MeanFieldSolution, Error> {
    meanfield_solve(config.nonlinearity, sigma_b, DEFAULT_NODES)
}

fn orthonormal_draw(rows: usize, cols: usize, rng: &mut Rng) -> Result<crate::Matrix, Error> {
    let mut last_err = None;
    for _ in 0..ORTHOGONAL_REDRAWS {
        let g = rng.gaussian_matrix(rows, cols, 1.0);
        match qr_orthonormal(&g) {
            Ok(q) => return Ok(q),
            Err(e @ Error::RankDeficient { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}
