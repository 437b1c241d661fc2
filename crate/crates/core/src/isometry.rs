//! Input-output Jacobian spectra: the conditioning diagnostics that
//! distinguish masks a network can still learn through from masks it cannot.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::decomp::svd;
use crate::linalg::matrix::Matrix;
use crate::network::{forward, io_jacobian, layer_jacobian, NetworkConfig, NetworkParams, PruneMask};

/// Pooled singular-value statistics of per-example input-output Jacobians.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JacobianSpectrum {
    /// All singular values, example-major, descending within each example.
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub s_max: f64,
    pub s_min: f64,
    /// `s_max / s_min`; infinite when the spectrum hits exact zero or any
    /// Jacobian overflowed.
    pub condition_number: f64,
    pub n_examples: usize,
    /// True when some Jacobian contained non-finite entries and was skipped.
    pub overflow: bool,
}

/// Computes the Jacobian spectrum over the first `n_examples` rows of
/// `inputs`, one Jacobian per example.
pub fn spectrum(
    config: &NetworkConfig,
    params: &NetworkParams,
    mask: Option<&PruneMask>,
    inputs: &Matrix,
    n_examples: usize,
) -> Result<JacobianSpectrum, Error> {
    if n_examples == 0 || inputs.rows() == 0 {
        return Err(Error::InvalidArgument {
            op: "spectrum",
            detail: "need at least one example".to_string(),
        });
    }
    let n = n_examples.min(inputs.rows());
    let mut values = Vec::new();
    let mut overflow = false;
    for e in 0..n {
        let x = inputs.gather_rows(&[e]);
        let trace = forward(config, params, mask, &x)?;
        let jac = io_jacobian(params, mask, &trace)?;
        if !jac.is_finite() {
            overflow = true;
            continue;
        }
        values.extend(svd(&jac)?.singular_values);
    }
    Ok(summarize(values, n, overflow))
}

fn summarize(values: Vec<f64>, n_examples: usize, overflow: bool) -> JacobianSpectrum {
    let count = values.len();
    let (mean, std, s_max, s_min) = if count == 0 {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    } else {
        let mean = values.iter().sum::<f64>() / count as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
        let s_max = values.iter().copied().fold(f64::MIN, f64::max);
        let s_min = values.iter().copied().fold(f64::MAX, f64::min);
        (mean, var.sqrt(), s_max, s_min)
    };
    let condition_number = if overflow || count == 0 || s_min == 0.0 {
        f64::INFINITY
    } else {
        s_max / s_min
    };
    JacobianSpectrum {
        values,
        mean,
        std,
        s_max,
        s_min,
        condition_number,
        n_examples,
        overflow,
    }
}

/// Singular values of each single-layer Jacobian at one input, in layer
/// order.
pub fn layer_spectra(
    config: &NetworkConfig,
    params: &NetworkParams,
    mask: Option<&PruneMask>,
    example: &Matrix,
) -> Result<Vec<Vec<f64>>, Error> {
    if example.rows() != 1 {
        return Err(Error::InvalidArgument {
            op: "layer_spectra",
            detail: format!("expected one example, got {}", example.rows()),
        });
    }
    let trace = forward(config, params, mask, example)?;
    (1..=config.depth())
        .map(|l| Ok(svd(&layer_jacobian(params, mask, &trace, l)?)?.singular_values))
        .collect()
}
