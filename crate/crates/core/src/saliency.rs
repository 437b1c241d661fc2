//! Connection sensitivity and mask selection.
//!
//! Sensitivity of a connection is the loss derivative with respect to its
//! mask variable at the all-ones mask, `dL/dc = dL/d(c .* W) .* W`,
//! accumulated over the whole dataset and normalized to sum to one. Pruning
//! keeps the global top fraction of connections by that score.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Error;
use crate::linalg::matrix::Matrix;
use crate::network::{backward, forward, NetworkConfig, NetworkParams, PruneMask};
use crate::rng::Rng;

/// Loss whose gradient drives sensitivity scoring.
///
/// `GtCrossEntropy` is ordinary supervised cross-entropy. The other three
/// need no labels: `UniformTarget` is cross-entropy against the uniform
/// distribution, `PredSoftmax` is cross-entropy against the batch-averaged
/// softmax output, and `PredRaw` is squared error against the batch-averaged
/// raw logits. Batch-averaged targets are constants (no gradient flows
/// through the average), recomputed per batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    GtCrossEntropy,
    UniformTarget,
    PredRaw,
    PredSoftmax,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::GtCrossEntropy => "gt_crossentropy",
            LossKind::UniformTarget => "uniform_target",
            LossKind::PredRaw => "pred_raw",
            LossKind::PredSoftmax => "pred_softmax",
        }
    }

    pub fn needs_labels(self) -> bool {
        matches!(self, LossKind::GtCrossEntropy)
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "gt" | "gt_crossentropy" => Ok(LossKind::GtCrossEntropy),
            "uniform" | "uniform_target" => Ok(LossKind::UniformTarget),
            "pred_raw" => Ok(LossKind::PredRaw),
            "pred_softmax" => Ok(LossKind::PredSoftmax),
            other => Err(Error::InvalidArgument {
                op: "LossKind::from_str",
                detail: format!(
                    "unknown loss {other:?}, expected gt|uniform|pred_raw|pred_softmax"
                ),
            }),
        }
    }
}

/// Numerically stable row-wise softmax.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            sum += *x;
        }
        for x in row.iter_mut() {
            *x /= sum;
        }
    }
    out
}

/// Mean cross-entropy of logits against integer labels, via log-sum-exp.
pub fn cross_entropy_mean(logits: &Matrix, labels: &[usize]) -> f64 {
    assert_eq!(logits.rows(), labels.len());
    let mut total = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        total += lse - row[label];
    }
    total / labels.len() as f64
}

/// Gradient of the batch-mean loss with respect to the logits.
pub fn loss_grad_logits(
    logits: &Matrix,
    labels: Option<&[usize]>,
    kind: LossKind,
) -> Result<Matrix, Error> {
    let n = logits.rows();
    let c = logits.cols();
    let scale = 1.0 / n as f64;
    match kind {
        LossKind::GtCrossEntropy => {
            let labels = labels.ok_or(Error::MissingLabels {
                loss: "gt_crossentropy",
            })?;
            if labels.len() != n {
                return Err(Error::InvalidArgument {
                    op: "loss_grad_logits",
                    detail: format!("{} labels for {} examples", labels.len(), n),
                });
            }
            if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
                return Err(Error::InvalidArgument {
                    op: "loss_grad_logits",
                    detail: format!("label {bad} out of range for {c} classes"),
                });
            }
            let mut g = softmax_rows(logits);
            for (i, &label) in labels.iter().enumerate() {
                g[(i, label)] -= 1.0;
            }
            Ok(g.map(|x| x * scale))
        }
        LossKind::UniformTarget => {
            let g = softmax_rows(logits);
            let u = 1.0 / c as f64;
            Ok(g.map(|x| (x - u) * scale))
        }
        LossKind::PredSoftmax => {
            let mut g = softmax_rows(logits);
            let mut target = g.col_sums();
            for t in &mut target {
                *t *= scale;
            }
            for i in 0..n {
                for (x, &t) in g.row_mut(i).iter_mut().zip(&target) {
                    *x = (*x - t) * scale;
                }
            }
            Ok(g)
        }
        LossKind::PredRaw => {
            let mut target = logits.col_sums();
            for t in &mut target {
                *t *= scale;
            }
            let mut g = logits.clone();
            for i in 0..n {
                for (x, &t) in g.row_mut(i).iter_mut().zip(&target) {
                    *x = (*x - t) * scale;
                }
            }
            Ok(g)
        }
    }
}

/// Per-connection sensitivities.
///
/// `raw[l]` is the signed `dL/dc` accumulated (summed) over every example;
/// `scores[l]` is `|raw|` normalized by the global total, so all scores sum
/// to one.
#[derive(Debug, Clone)]
pub struct SaliencyMap {
    pub raw: Vec<Matrix>,
    pub scores: Vec<Matrix>,
}

impl SaliencyMap {
    pub fn total_weights(&self) -> usize {
        self.scores.iter().map(|m| m.data().len()).sum()
    }

    /// Mean score per layer, in layer order.
    pub fn per_layer_mean(&self) -> Vec<f64> {
        self.scores
            .iter()
            .map(|m| m.data().iter().sum::<f64>() / m.data().len() as f64)
            .collect()
    }
}

pub const SALIENCY_BATCH: usize = 1000;

/// Accumulates connection sensitivity over the full dataset at the all-ones
/// mask.
///
/// Batches are internal (size `batch_size`, traversed in dataset order), and
/// gradients are summed over examples before the absolute value is taken, so
/// the result is independent of threading and batch boundaries except for
/// the batch-averaged targets of the `pred_*` losses, which are recomputed
/// per batch by design.
pub fn connection_sensitivity(
    config: &NetworkConfig,
    params: &NetworkParams,
    dataset: &Dataset,
    kind: LossKind,
    batch_size: usize,
) -> Result<SaliencyMap, Error> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument {
            op: "connection_sensitivity",
            detail: "empty dataset".to_string(),
        });
    }
    if batch_size == 0 {
        return Err(Error::InvalidArgument {
            op: "connection_sensitivity",
            detail: "batch_size must be positive".to_string(),
        });
    }
    let mut acc: Vec<Matrix> = params
        .weights
        .iter()
        .map(|w| Matrix::zeros(w.rows(), w.cols()))
        .collect();
    let n = dataset.len();
    let mut start = 0;
    while start < n {
        let end = (start + batch_size).min(n);
        let batch = dataset.take_rows(start, end);
        let trace = forward(config, params, None, &batch.inputs)?;
        let grad = loss_grad_logits(trace.logits(), Some(&batch.labels), kind)?;
        let grads = backward(params, None, &trace, &grad)?;
        // loss_grad_logits is batch-mean scaled; multiply back to a plain
        // sum over examples so batch size does not weight the accumulation.
        let bn = (end - start) as f64;
        for (a, g) in acc.iter_mut().zip(&grads.d_weights) {
            a.add_scaled(bn, g);
        }
        start = end;
    }
    let raw: Vec<Matrix> = acc
        .iter()
        .zip(&params.weights)
        .map(|(a, w)| a.hadamard(w))
        .collect::<Result<_, _>>()?;
    if raw.iter().any(|m| !m.is_finite()) {
        return Err(Error::NonFinite {
            op: "connection_sensitivity",
        });
    }
    let total: f64 = raw
        .iter()
        .map(|m| m.data().iter().map(|x| x.abs()).sum::<f64>())
        .sum();
    if total == 0.0 {
        return Err(Error::DegenerateSaliency);
    }
    let scores = raw.iter().map(|m| m.map(|x| x.abs() / total)).collect();
    Ok(SaliencyMap { raw, scores })
}

/// Outcome of mask selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PruneReport {
    pub mask: PruneMask,
    pub kappa_bar: f64,
    pub total_weights: usize,
    pub retained_weights: usize,
    pub per_layer_pruned: Vec<f64>,
    pub disconnected: bool,
}

/// Number of weights kept at sparsity `kappa_bar`: `ceil((1 - kappa) * m)`,
/// with exact integer products snapped before the ceiling so that, say,
/// 10% of 89,610 is 8,961 rather than 8,962.
pub fn retained_count(total: usize, kappa_bar: f64) -> usize {
    let x = (1.0 - kappa_bar) * total as f64;
    let snapped = if (x - x.round()).abs() < 1e-6 * x.max(1.0) {
        x.round()
    } else {
        x.ceil()
    };
    (snapped as usize).min(total)
}

fn check_kappa(kappa_bar: f64, op: &'static str) -> Result<(), Error> {
    if !(0.0..1.0).contains(&kappa_bar) {
        return Err(Error::InvalidArgument {
            op,
            detail: format!("kappa_bar {kappa_bar} outside [0, 1)"),
        });
    }
    Ok(())
}

/// Keeps the globally highest-scoring connections.
///
/// Ties break lexicographically on (layer, row, column), so the selection is
/// a deterministic function of the scores.
pub fn select_topk(saliency: &SaliencyMap, kappa_bar: f64) -> Result<PruneReport, Error> {
    check_kappa(kappa_bar, "select_topk")?;
    let total = saliency.total_weights();
    let keep = retained_count(total, kappa_bar);
    let mut entries: Vec<(f64, usize, usize, usize)> = Vec::with_capacity(total);
    for (l, m) in saliency.scores.iter().enumerate() {
        for i in 0..m.rows() {
            for (j, &s) in m.row(i).iter().enumerate() {
                entries.push((s, l, i, j));
            }
        }
    }
    entries.sort_unstable_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });
    let mut layers: Vec<Matrix> = saliency
        .scores
        .iter()
        .map(|m| Matrix::zeros(m.rows(), m.cols()))
        .collect();
    for &(_, l, i, j) in entries.iter().take(keep) {
        layers[l][(i, j)] = 1.0;
    }
    let mask = PruneMask { layers };
    Ok(report_for(mask, kappa_bar, total, keep))
}

/// Uniformly random mask at the same sparsity, the control for top-k.
pub fn random_mask(
    config: &NetworkConfig,
    kappa_bar: f64,
    rng: &mut Rng,
) -> Result<PruneReport, Error> {
    check_kappa(kappa_bar, "random_mask")?;
    let mut layers: Vec<Matrix> = (1..=config.depth())
        .map(|l| {
            let (fan_in, fan_out) = config.layer_dims(l);
            Matrix::zeros(fan_out, fan_in)
        })
        .collect();
    let total: usize = layers.iter().map(|m| m.data().len()).sum();
    let keep = retained_count(total, kappa_bar);
    let mut flat: Vec<usize> = (0..total).collect();
    rng.shuffle(&mut flat);
    for &pick in flat.iter().take(keep) {
        let mut offset = pick;
        for layer in &mut layers {
            if offset < layer.data().len() {
                layer.data_mut()[offset] = 1.0;
                break;
            }
            offset -= layer.data().len();
        }
    }
    let mask = PruneMask { layers };
    Ok(report_for(mask, kappa_bar, total, keep))
}

fn report_for(mask: PruneMask, kappa_bar: f64, total: usize, keep: usize) -> PruneReport {
    let per_layer_pruned = mask.per_layer_pruned_fraction();
    let disconnected = is_disconnected(&mask);
    debug_assert_eq!(mask.retained(), keep);
    PruneReport {
        mask,
        kappa_bar,
        total_weights: total,
        retained_weights: keep,
        per_layer_pruned,
        disconnected,
    }
}

/// True when no output unit remains reachable from any input unit through
/// retained connections, i.e. the mask has completely severed input from
/// output.
pub fn is_disconnected(mask: &PruneMask) -> bool {
    let mut reach = vec![true; mask.layers[0].cols()];
    for layer in &mask.layers {
        let mut next = vec![false; layer.rows()];
        for (i, n) in next.iter_mut().enumerate() {
            let row = layer.row(i);
            *n = row.iter().zip(&reach).any(|(&c, &r)| c == 1.0 && r);
        }
        reach = next;
    }
    !reach.iter().any(|&r| r)
}

/// Sparsity that shrinks `big`'s weight budget down to `target_weights`.
pub fn kappa_for_budget(big: &NetworkConfig, target_weights: usize) -> Result<f64, Error> {
    let total: usize = (1..=big.depth())
        .map(|l| {
            let (fan_in, fan_out) = big.layer_dims(l);
            fan_in * fan_out
        })
        .sum();
    if target_weights == 0 || target_weights > total {
        return Err(Error::InvalidArgument {
            op: "kappa_for_budget",
            detail: format!("target {target_weights} outside [1, {total}]"),
        });
    }
    Ok(1.0 - target_weights as f64 / total as f64)
}
