//! Fully-connected networks: masked execution, gradients, Jacobians.
//!
//! A network of depth `K` has widths `[n_0, n_1, ..., n_K]`; layer `l`
//! (1-based) computes `h^l = W^l x^(l-1) + b^l` followed by the elementwise
//! nonlinearity, except the output layer, which stays affine. A connection
//! mask `c` with entries in {0, 1} multiplies the weights elementwise; all
//! derivatives here are taken with respect to the effective weights
//! `c .* W`, which is what both training under a mask and sensitivity
//! analysis need.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::matrix::Matrix;

/// Hidden-layer activation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    Linear,
    Tanh,
    Relu,
}

impl Nonlinearity {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Nonlinearity::Linear => x,
            Nonlinearity::Tanh => x.tanh(),
            Nonlinearity::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
        }
    }

    /// Pointwise derivative; the relu subgradient at zero is taken as 0.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Nonlinearity::Linear => 1.0,
            Nonlinearity::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Nonlinearity::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Nonlinearity::Linear => "linear",
            Nonlinearity::Tanh => "tanh",
            Nonlinearity::Relu => "relu",
        }
    }
}

impl std::str::FromStr for Nonlinearity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "linear" => Ok(Nonlinearity::Linear),
            "tanh" => Ok(Nonlinearity::Tanh),
            "relu" => Ok(Nonlinearity::Relu),
            other => Err(Error::InvalidArgument {
                op: "Nonlinearity::from_str",
                detail: format!("unknown nonlinearity {other:?}, expected linear|tanh|relu"),
            }),
        }
    }
}

/// Architecture: layer widths (input first, output last) plus nonlinearity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub layer_widths: Vec<usize>,
    pub nonlinearity: Nonlinearity,
}

impl NetworkConfig {
    pub fn new(layer_widths: Vec<usize>, nonlinearity: Nonlinearity) -> Result<Self, Error> {
        if layer_widths.len() < 2 || layer_widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArgument {
                op: "NetworkConfig::new",
                detail: format!("need at least two positive widths, got {layer_widths:?}"),
            });
        }
        Ok(NetworkConfig {
            layer_widths,
            nonlinearity,
        })
    }

    /// Number of weight layers `K`.
    pub fn depth(&self) -> usize {
        self.layer_widths.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    /// Fan-in/fan-out of weight layer `l` (1-based): `(n_(l-1), n_l)`.
    pub fn layer_dims(&self, l: usize) -> (usize, usize) {
        (self.layer_widths[l - 1], self.layer_widths[l])
    }
}

/// Total scalar parameter count: weights plus biases.
pub fn count_params(config: &NetworkConfig) -> usize {
    (1..=config.depth())
        .map(|l| {
            let (fan_in, fan_out) = config.layer_dims(l);
            fan_in * fan_out + fan_out
        })
        .sum()
}

/// Weights and biases. `weights[i]` is `n_(i+1) x n_i` (row per output unit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl NetworkParams {
    pub fn zeros(config: &NetworkConfig) -> Self {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 1..=config.depth() {
            let (fan_in, fan_out) = config.layer_dims(l);
            weights.push(Matrix::zeros(fan_out, fan_in));
            biases.push(vec![0.0; fan_out]);
        }
        NetworkParams { weights, biases }
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    /// Checks that shapes line up layer to layer and match `config`.
    pub fn validate(&self, config: &NetworkConfig) -> Result<(), Error> {
        if self.weights.len() != config.depth() || self.biases.len() != config.depth() {
            return Err(Error::InvalidArgument {
                op: "NetworkParams::validate",
                detail: format!(
                    "{} weight layers and {} bias layers for depth {}",
                    self.weights.len(),
                    self.biases.len(),
                    config.depth()
                ),
            });
        }
        for l in 1..=config.depth() {
            let (fan_in, fan_out) = config.layer_dims(l);
            let w = &self.weights[l - 1];
            if w.shape() != (fan_out, fan_in) || self.biases[l - 1].len() != fan_out {
                return Err(Error::InvalidArgument {
                    op: "NetworkParams::validate",
                    detail: format!(
                        "layer {l}: weight shape {:?} or bias length {} does not match ({fan_out}, {fan_in})",
                        w.shape(),
                        self.biases[l - 1].len()
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Connection mask, one 0/1 matrix per weight layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneMask {
    pub layers: Vec<Matrix>,
}

impl PruneMask {
    /// All-ones mask (nothing pruned) shaped like `config`.
    pub fn ones(config: &NetworkConfig) -> Self {
        let layers = (1..=config.depth())
            .map(|l| {
                let (fan_in, fan_out) = config.layer_dims(l);
                Matrix::from_fn(fan_out, fan_in, |_, _| 1.0)
            })
            .collect();
        PruneMask { layers }
    }

    /// Total number of maskable weights.
    pub fn total(&self) -> usize {
        self.layers.iter().map(|m| m.data().len()).sum()
    }

    /// Number of retained (unmasked) weights.
    pub fn retained(&self) -> usize {
        self.layers
            .iter()
            .map(|m| m.data().iter().filter(|&&x| x == 1.0).count())
            .sum()
    }

    /// Fraction of weights pruned in each layer.
    pub fn per_layer_pruned_fraction(&self) -> Vec<f64> {
        self.layers
            .iter()
            .map(|m| {
                let kept = m.data().iter().filter(|&&x| x == 1.0).count();
                1.0 - kept as f64 / m.data().len() as f64
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), Error> {
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.data().iter().any(|&x| x != 0.0 && x != 1.0) {
                return Err(Error::InvalidArgument {
                    op: "PruneMask::validate",
                    detail: format!("layer {} contains entries outside {{0, 1}}", i + 1),
                });
            }
        }
        Ok(())
    }
}

/// Zeroes out masked weights, leaving biases untouched.
pub fn apply_mask(params: &NetworkParams, mask: &PruneMask) -> Result<NetworkParams, Error> {
    let weights = params
        .weights
        .iter()
        .zip(&mask.layers)
        .map(|(w, c)| w.hadamard(c))
        .collect::<Result<Vec<_>, _>>()?;
    if weights.len() != params.weights.len() || mask.layers.len() != params.weights.len() {
        return Err(Error::InvalidArgument {
            op: "apply_mask",
            detail: format!(
                "mask has {} layers, network has {}",
                mask.layers.len(),
                params.weights.len()
            ),
        });
    }
    Ok(NetworkParams {
        weights,
        biases: params.biases.clone(),
    })
}

fn effective_weights<'a>(
    params: &'a NetworkParams,
    mask: Option<&PruneMask>,
) -> Result<Vec<Cow<'a, Matrix>>, Error> {
    match mask {
        None => Ok(params.weights.iter().map(Cow::Borrowed).collect()),
        Some(m) => {
            if m.layers.len() != params.weights.len() {
                return Err(Error::InvalidArgument {
                    op: "effective_weights",
                    detail: format!(
                        "mask has {} layers, network has {}",
                        m.layers.len(),
                        params.weights.len()
                    ),
                });
            }
            params
                .weights
                .iter()
                .zip(&m.layers)
                .map(|(w, c)| w.hadamard(c).map(Cow::Owned))
                .collect()
        }
    }
}

/// Everything the forward pass saw: inputs, pre-activations, activations,
/// and pointwise derivatives, batched one example per row.
///
/// `pre[i]` and `deriv[i]` belong to weight layer `i + 1`; `acts[0]` is the
/// input and `acts[K]` the logits. The output layer is affine, so its
/// `deriv` entry is all ones.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub acts: Vec<Matrix>,
    pub pre: Vec<Matrix>,
    pub deriv: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn logits(&self) -> &Matrix {
        self.acts.last().unwrap()
    }

    pub fn batch_len(&self) -> usize {
        self.acts[0].rows()
    }
}

fn add_row_bias(m: &mut Matrix, bias: &[f64]) {
    for i in 0..m.rows() {
        for (x, &b) in m.row_mut(i).iter_mut().zip(bias) {
            *x += b;
        }
    }
}

/// Runs the network over a batch, recording the full trace.
pub fn forward(
    config: &NetworkConfig,
    params: &NetworkParams,
    mask: Option<&PruneMask>,
    inputs: &Matrix,
) -> Result<ForwardTrace, Error> {
    params.validate(config)?;
    let phi = config.nonlinearity;
    let k = params.weights.len();
    if k == 0 {
        return Err(Error::InvalidArgument {
            op: "forward",
            detail: "network has no layers".to_string(),
        });
    }
    if inputs.cols() != params.weights[0].cols() {
        return Err(Error::ShapeMismatch {
            op: "forward",
            lhs_rows: inputs.rows(),
            lhs_cols: inputs.cols(),
            rhs_rows: params.weights[0].rows(),
            rhs_cols: params.weights[0].cols(),
        });
    }
    let eff = effective_weights(params, mask)?;
    let mut acts = Vec::with_capacity(k + 1);
    let mut pre = Vec::with_capacity(k);
    let mut deriv = Vec::with_capacity(k);
    acts.push(inputs.clone());
    for l in 0..k {
        let mut h = acts[l].matmul(&eff[l].transpose())?;
        add_row_bias(&mut h, &params.biases[l]);
        if l + 1 < k {
            acts.push(h.map(|x| phi.apply(x)));
            deriv.push(h.map(|x| phi.derivative(x)));
        } else {
            acts.push(h.clone());
            deriv.push(h.map(|_| 1.0));
        }
        pre.push(h);
    }
    Ok(ForwardTrace { acts, pre, deriv })
}

/// Gradients with respect to effective weights (`c .* W`) and biases.
///
/// Under a mask, the gradient with respect to the raw weights is
/// `d_weights .* c`, and the gradient with respect to the mask itself is
/// `d_weights .* W`; both are derived from this one struct.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub d_weights: Vec<Matrix>,
    pub d_biases: Vec<Vec<f64>>,
}

impl Gradients {
    /// Per-layer `dL/dc`: the loss derivative with respect to each mask entry.
    pub fn mask_gradients(&self, params: &NetworkParams) -> Result<Vec<Matrix>, Error> {
        self.d_weights
            .iter()
            .zip(&params.weights)
            .map(|(g, w)| g.hadamard(w))
            .collect()
    }
}

/// Backpropagates `loss_grad = dL/dlogits` through the recorded trace.
///
/// The trace must come from the same `(params, mask)` pair.
pub fn backward(
    params: &NetworkParams,
    mask: Option<&PruneMask>,
    trace: &ForwardTrace,
    loss_grad: &Matrix,
) -> Result<Gradients, Error> {
    let k = params.weights.len();
    if loss_grad.shape() != trace.logits().shape() {
        return Err(Error::ShapeMismatch {
            op: "backward",
            lhs_rows: loss_grad.rows(),
            lhs_cols: loss_grad.cols(),
            rhs_rows: trace.logits().rows(),
            rhs_cols: trace.logits().cols(),
        });
    }
    let eff = effective_weights(params, mask)?;
    let mut d_weights: Vec<Matrix> = Vec::with_capacity(k);
    let mut d_biases: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut delta = loss_grad.clone();
    for l in (0..k).rev() {
        d_weights.push(delta.transpose().matmul(&trace.acts[l])?);
        d_biases.push(delta.col_sums());
        if l > 0 {
            delta = delta.matmul(&eff[l])?.hadamard(&trace.deriv[l - 1])?;
        }
    }
    d_weights.reverse();
    d_biases.reverse();
    Ok(Gradients {
        d_weights,
        d_biases,
    })
}

fn require_single_example(trace: &ForwardTrace, op: &'static str) -> Result<(), Error> {
    if trace.batch_len() != 1 {
        return Err(Error::InvalidArgument {
            op,
            detail: format!("needs a single-example trace, got batch of {}", trace.batch_len()),
        });
    }
    Ok(())
}

/// Jacobian of layer `l` (1-based) at the traced point: `D^l W_eff^l`.
pub fn layer_jacobian(
    params: &NetworkParams,
    mask: Option<&PruneMask>,
    trace: &ForwardTrace,
    l: usize,
) -> Result<Matrix, Error> {
    require_single_example(trace, "layer_jacobian")?;
    let k = params.weights.len();
    if l == 0 || l > k {
        return Err(Error::InvalidArgument {
            op: "layer_jacobian",
            detail: format!("layer {l} outside [1, {k}]"),
        });
    }
    let eff = effective_weights(params, mask)?;
    let mut j = eff[l - 1].clone().into_owned();
    j.scale_rows(trace.deriv[l - 1].row(0));
    Ok(j)
}

/// Input-output Jacobian: the ordered product of all layer Jacobians,
/// highest layer leftmost.
pub fn io_jacobian(
    params: &NetworkParams,
    mask: Option<&PruneMask>,
    trace: &ForwardTrace,
) -> Result<Matrix, Error> {
    partial_jacobian(params, mask, trace, 0, params.weights.len())
}

/// Jacobian of `x^hi` with respect to `x^lo` (`lo < hi`, both 0-based
/// activations), i.e. the product `J^(hi) ... J^(lo+1)`.
pub fn partial_jacobian(
    params: &NetworkParams,
    mask: Option<&PruneMask>,
    trace: &ForwardTrace,
    lo: usize,
    hi: usize,
) -> Result<Matrix, Error> {
    require_single_example(trace, "partial_jacobian")?;
    let k = params.weights.len();
    if lo >= hi || hi > k {
        return Err(Error::InvalidArgument {
            op: "partial_jacobian",
            detail: format!("need 0 <= lo < hi <= {k}, got lo {lo}, hi {hi}"),
        });
    }
    let mut j = layer_jacobian(params, mask, trace, hi)?;
    for l in (lo + 1..hi).rev() {
        j = j.matmul(&layer_jacobian(params, mask, trace, l)?)?;
    }
    Ok(j)
}

/// Deviations between backpropagated weight gradients and their closed
/// factorized forms, maximized over layers.
///
/// `compact` checks the rank-one structure `dL/dW^l = (eps J^(l,K) D^l)
/// outer x^(l-1)` that holds for any architecture; `linear_form` additionally
/// checks the input-referred expression `eps J^(l,K) outer (J^(0,l-1) x^0 +
/// a)` with `a` accumulating the upstream biases, which is exact only for
/// linear networks and is `None` otherwise.
#[derive(Debug, Clone, Copy)]
pub struct GradientFactorization {
    pub compact: f64,
    pub linear_form: Option<f64>,
}

/// Compares backprop against the factorized gradient forms on one example.
pub fn factorization_check(
    config: &NetworkConfig,
    params: &NetworkParams,
    trace: &ForwardTrace,
    loss_grad: &Matrix,
) -> Result<GradientFactorization, Error> {
    require_single_example(trace, "factorization_check")?;
    params.validate(config)?;
    let k = params.weights.len();
    let grads = backward(params, None, trace, loss_grad)?;
    let eps = loss_grad; // 1 x n_K

    let mut compact: f64 = 0.0;
    for l in 1..=k {
        // eps J^(l,K): trailing product, identity when l = K.
        let row = if l == k {
            eps.clone()
        } else {
            eps.matmul(&partial_jacobian(params, None, trace, l, k)?)?
        };
        let d = trace.deriv[l - 1].row(0);
        let x_prev = trace.acts[l - 1].row(0);
        let expected = Matrix::from_fn(row.cols(), x_prev.len(), |i, j| {
            (row.row(0)[i] * d[i]) * x_prev[j]
        });
        compact = compact.max(expected.max_abs_diff(&grads.d_weights[l - 1]));
    }

    let linear_form = if config.nonlinearity == Nonlinearity::Linear {
        let mut worst: f64 = 0.0;
        for l in 1..=k {
            let row = if l == k {
                eps.clone()
            } else {
                eps.matmul(&partial_jacobian(params, None, trace, l, k)?)?
            };
            // Rebuild x^(l-1) from the input side: J^(0,l-1) x^0 + a, where
            // a = W^(l-1) (... (W^1 0 + b^1) ...) + b^(l-1).
            let n_prev = trace.acts[l - 1].cols();
            let mut u = vec![0.0f64; n_prev];
            if l == 1 {
                u.copy_from_slice(trace.acts[0].row(0));
            } else {
                let j0 = partial_jacobian(params, None, trace, 0, l - 1)?;
                let x0 = trace.acts[0].row(0);
                let mut a = vec![0.0f64; params.biases[0].len()];
                a.copy_from_slice(&params.biases[0]);
                for m in 1..(l - 1) {
                    let w = &params.weights[m];
                    let mut next = params.biases[m].clone();
                    for (i, nx) in next.iter_mut().enumerate() {
                        let wrow = w.row(i);
                        let mut acc = 0.0;
                        for (t, &aval) in a.iter().enumerate() {
                            acc += wrow[t] * aval;
                        }
                        *nx += acc;
                    }
                    a = next;
                }
                for (i, uv) in u.iter_mut().enumerate() {
                    let jrow = j0.row(i);
                    let mut acc = 0.0;
                    for (t, &xv) in x0.iter().enumerate() {
                        acc += jrow[t] * xv;
                    }
                    *uv = acc + a[i];
                }
            }
            let expected = Matrix::from_fn(row.cols(), n_prev, |i, j| row.row(0)[i] * u[j]);
            worst = worst.max(expected.max_abs_diff(&grads.d_weights[l - 1]));
        }
        Some(worst)
    } else {
        None
    };

    Ok(GradientFactorization {
        compact,
        linear_form,
    })
}

const NETWORK_FORMAT: &str = "isoprune.network.v1";

/// On-disk container for a network, its optional mask, and free-form notes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    pub format: String,
    pub config: NetworkConfig,
    pub params: NetworkParams,
    pub mask: Option<PruneMask>,
    pub meta: BTreeMap<String, String>,
}

impl NetworkFile {
    pub fn new(config: NetworkConfig, params: NetworkParams, mask: Option<PruneMask>) -> Self {
        NetworkFile {
            format: NETWORK_FORMAT.to_string(),
            config,
            params,
            mask,
            meta: BTreeMap::new(),
        }
    }
}

/// Saves a network as pretty-printed JSON; floats round-trip exactly.
pub fn save_network(path: &Path, file: &NetworkFile) -> Result<(), Error> {
    let json = serde_json::to_string_pretty(file)?;
    std::fs::write(path, json)?;
    Ok(())
}

/// Loads a network container, checking the format marker.
pub fn load_network(path: &Path) -> Result<NetworkFile, Error> {
    let text = std::fs::read_to_string(path)?;
    let file: NetworkFile = serde_json::from_str(&text)?;
    if file.format != NETWORK_FORMAT {
        return Err(Error::FormatVersion {
            found: file.format,
            expected: NETWORK_FORMAT,
        });
    }
    file.params.validate(&file.config)?;
    Ok(file)
}
