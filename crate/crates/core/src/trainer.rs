//! Momentum SGD on cross-entropy, with the mask held fixed throughout.

use serde::{Deserialize, Serialize};

use crate::data::{Batches, Dataset};
use crate::error::Error;
use crate::linalg::matrix::Matrix;
use crate::network::{
    apply_mask, backward, forward, NetworkConfig, NetworkParams, PruneMask,
};
use crate::rng::Rng;
use crate::saliency::{cross_entropy_mean, loss_grad_logits, LossKind};

/// Optimization schedule. The learning rate starts at `lr0` and is divided
/// by `1 / decay_factor` every `decay_every` iterations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr0: f64,
    pub momentum: f64,
    pub decay_every: usize,
    pub decay_factor: f64,
    pub max_iters: usize,
    pub batch_size: usize,
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr0: 0.1,
            momentum: 0.9,
            decay_every: 20_000,
            decay_factor: 0.1,
            max_iters: 80_000,
            batch_size: 100,
            eval_every: 1_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |detail: String| Error::InvalidArgument {
            op: "TrainConfig::validate",
            detail,
        };
        if !(self.lr0.is_finite() && self.lr0 > 0.0) {
            return Err(bad(format!("lr0 {} must be positive", self.lr0)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(bad(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        if !(self.decay_factor.is_finite() && self.decay_factor > 0.0 && self.decay_factor <= 1.0)
        {
            return Err(bad(format!("decay_factor {} outside (0, 1]", self.decay_factor)));
        }
        if self.decay_every == 0 || self.max_iters == 0 || self.batch_size == 0 {
            return Err(bad("decay_every, max_iters, batch_size must be positive".into()));
        }
        if self.eval_every == 0 {
            return Err(bad("eval_every must be positive".into()));
        }
        Ok(())
    }
}

/// Learning rate at a given iteration under the staircase decay.
pub fn learning_rate(tcfg: &TrainConfig, iteration: usize) -> f64 {
    tcfg.lr0 * tcfg.decay_factor.powi((iteration / tcfg.decay_every) as i32)
}

/// Training outcome. `error_curve` holds `(iteration, eval error %)` pairs
/// recorded every `eval_every` iterations and at the final iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainResult {
    pub best_error_pct: f64,
    pub final_error_pct: f64,
    pub final_loss: f64,
    pub error_curve: Vec<(usize, f64)>,
    pub params: NetworkParams,
}

/// Classification error (percent) on a dataset, evaluated in chunks.
///
/// Argmax ties resolve to the lowest class index.
pub fn evaluate(
    config: &NetworkConfig,
    params: &NetworkParams,
    mask: Option<&PruneMask>,
    ds: &Dataset,
) -> Result<f64, Error> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument {
            op: "evaluate",
            detail: "empty dataset".to_string(),
        });
    }
    let chunk = 1000;
    let mut correct = 0usize;
    let mut start = 0;
    while start < ds.len() {
        let end = (start + chunk).min(ds.len());
        let batch = ds.take_rows(start, end);
        let trace = forward(config, params, mask, &batch.inputs)?;
        let logits = trace.logits();
        for (i, &label) in batch.labels.iter().enumerate() {
            let row = logits.row(i);
            let mut arg = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[arg] {
                    arg = j;
                }
            }
            if arg == label {
                correct += 1;
            }
        }
        start = end;
    }
    Ok(100.0 * (1.0 - correct as f64 / ds.len() as f64))
}

/// Trains with momentum SGD on ground-truth cross-entropy.
///
/// The mask is immutable: masked weights contribute nothing to the forward
/// pass, receive no gradient, and are pinned to zero after every step. The
/// batch order is a deterministic function of `rng`.
pub fn train(
    config: &NetworkConfig,
    params: NetworkParams,
    mask: Option<&PruneMask>,
    train_ds: &Dataset,
    eval_ds: &Dataset,
    tcfg: &TrainConfig,
    rng: Rng,
) -> Result<TrainResult, Error> {
    tcfg.validate()?;
    params.validate(config)?;
    let mut params = match mask {
        Some(m) => apply_mask(&params, m)?,
        None => params,
    };
    let mut vel_w: Vec<Matrix> = params
        .weights
        .iter()
        .map(|w| Matrix::zeros(w.rows(), w.cols()))
        .collect();
    let mut vel_b: Vec<Vec<f64>> = params.biases.iter().map(|b| vec![0.0; b.len()]).collect();
    let mut batches = Batches::new(train_ds, tcfg.batch_size, rng)?;
    let mut curve = Vec::new();
    let mut best = f64::INFINITY;
    let mut final_loss = f64::NAN;
    for it in 0..tcfg.max_iters {
        let (bx, by) = batches.next_batch();
        let trace = forward(config, &params, mask, &bx)?;
        let loss = cross_entropy_mean(trace.logits(), &by);
        let lr = learning_rate(tcfg, it);
        if !loss.is_finite() {
            return Err(Error::NanLoss { iteration: it, lr });
        }
        final_loss = loss;
        let grad = loss_grad_logits(trace.logits(), Some(&by), LossKind::GtCrossEntropy)?;
        let grads = backward(&params, mask, &trace, &grad)?;
        for l in 0..params.weights.len() {
            // Gradients are with respect to effective weights; zero them on
            // masked slots so momentum never drags a pruned weight around.
            let masked_grad = match mask {
                Some(m) => grads.d_weights[l].hadamard(&m.layers[l])?,
                None => grads.d_weights[l].clone(),
            };
            vel_w[l] = vel_w[l].map(|v| v * tcfg.momentum);
            vel_w[l].add_scaled(-lr, &masked_grad);
            params.weights[l].add_scaled(1.0, &vel_w[l]);
            for ((v, g), b) in vel_b[l]
                .iter_mut()
                .zip(&grads.d_biases[l])
                .zip(params.biases[l].iter_mut())
            {
                *v = tcfg.momentum * *v - lr * g;
                *b += *v;
            }
        }
        if let Some(m) = mask {
            params = apply_mask(&params, m)?;
        }
        let done = it + 1 == tcfg.max_iters;
        if (it + 1) % tcfg.eval_every == 0 || done {
            let err = evaluate(config, &params, mask, eval_ds)?;
            best = best.min(err);
            curve.push((it + 1, err));
        }
    }
    let final_error_pct = curve.last().map(|&(_, e)| e).unwrap_or(f64::NAN);
    Ok(TrainResult {
        best_error_pct: best,
        final_error_pct,
        final_loss,
        error_curve: curve,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic_blobs;
    use crate::init::{init_network, InitScheme, InitSpec};
    use crate::network::Nonlinearity;
    use crate::saliency::{connection_sensitivity, random_mask, select_topk};

    fn blob_problem(seed: u64) -> (NetworkConfig, NetworkParams, Dataset, Dataset) {
        let config = NetworkConfig::new(vec![8, 16, 3], Nonlinearity::Tanh).unwrap();
        let params = init_network(&config, &InitSpec::new(InitScheme::VsGlorot, seed)).unwrap();
        let mut rng = Rng::new(seed ^ 0xDA7A);
        let train = synthetic_blobs(40, 3, 8, 0.10, &mut rng).unwrap();
        let eval = synthetic_blobs(20, 3, 8, 0.10, &mut rng).unwrap();
        (config, params, train, eval)
    }

    #[test]
    fn learning_rate_follows_staircase_exactly() {
        let tcfg = TrainConfig::default();
        assert_eq!(learning_rate(&tcfg, 0), 0.1);
        assert_eq!(learning_rate(&tcfg, 19_999), 0.1);
        assert_eq!(learning_rate(&tcfg, 20_000), 0.1 * 0.1f64.powi(1));
        assert_eq!(learning_rate(&tcfg, 59_999), 0.1 * 0.1f64.powi(2));
        assert_eq!(learning_rate(&tcfg, 60_000), 0.1 * 0.1f64.powi(3));
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            TrainConfig { lr0: 0.0, ..ok.clone() },
            TrainConfig { momentum: 1.0, ..ok.clone() },
            TrainConfig { decay_factor: 0.0, ..ok.clone() },
            TrainConfig { decay_every: 0, ..ok.clone() },
            TrainConfig { batch_size: 0, ..ok.clone() },
            TrainConfig { eval_every: 0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn evaluate_counts_argmax_with_low_index_ties() {
        let config = NetworkConfig::new(vec![2, 3], Nonlinearity::Linear).unwrap();
        // Zero weights and biases: constant zero logits, all ties resolve
        // to class 0.
        let params = NetworkParams::zeros(&config);
        let inputs = Matrix::from_vec(4, 2, vec![0.1; 8]).unwrap();
        let ds = Dataset {
            inputs,
            labels: vec![0, 1, 2, 0],
            n_classes: 3,
        };
        let err = evaluate(&config, &params, None, &ds).unwrap();
        assert_eq!(err, 50.0);
    }

    #[test]
    fn training_learns_separable_blobs() {
        let (config, params, train_ds, eval_ds) = blob_problem(41);
        let tcfg = TrainConfig {
            max_iters: 400,
            batch_size: 20,
            eval_every: 100,
            decay_every: 200,
            ..TrainConfig::default()
        };
        let before = evaluate(&config, &params, None, &eval_ds).unwrap();
        let result = train(
            &config,
            params,
            None,
            &train_ds,
            &eval_ds,
            &tcfg,
            Rng::new(42),
        )
        .unwrap();
        assert!(result.best_error_pct < 10.0, "{}", result.best_error_pct);
        assert!(result.best_error_pct < before);
        assert_eq!(result.error_curve.len(), 4);
        assert_eq!(
            result.error_curve.iter().map(|&(i, _)| i).collect::<Vec<_>>(),
            vec![100, 200, 300, 400]
        );
        assert_eq!(result.final_error_pct, result.error_curve[3].1);
        assert!(result.final_loss.is_finite());
    }

    #[test]
    fn final_partial_eval_is_recorded() {
        let (config, params, train_ds, eval_ds) = blob_problem(43);
        let tcfg = TrainConfig {
            max_iters: 120,
            batch_size: 30,
            eval_every: 50,
            ..TrainConfig::default()
        };
        let result = train(
            &config,
            params,
            None,
            &train_ds,
            &eval_ds,
            &tcfg,
            Rng::new(44),
        )
        .unwrap();
        assert_eq!(
            result.error_curve.iter().map(|&(i, _)| i).collect::<Vec<_>>(),
            vec![50, 100, 120]
        );
    }

    #[test]
    fn masked_weights_stay_zero_through_training() {
        let (config, params, train_ds, eval_ds) = blob_problem(45);
        let report = {
            let sal = connection_sensitivity(
                &config,
                &params,
                &train_ds,
                LossKind::GtCrossEntropy,
                32,
            )
            .unwrap();
            select_topk(&sal, 0.5).unwrap()
        };
        let tcfg = TrainConfig {
            max_iters: 200,
            batch_size: 20,
            eval_every: 100,
            ..TrainConfig::default()
        };
        let result = train(
            &config,
            params,
            Some(&report.mask),
            &train_ds,
            &eval_ds,
            &tcfg,
            Rng::new(46),
        )
        .unwrap();
        for (w, m) in result.params.weights.iter().zip(&report.mask.layers) {
            for (x, c) in w.data().iter().zip(m.data()) {
                if *c == 0.0 {
                    assert_eq!(*x, 0.0);
                } else {
                    assert!(x.is_finite());
                }
            }
        }
        assert!(result.best_error_pct < 35.0, "{}", result.best_error_pct);
    }

    #[test]
    fn training_is_deterministic() {
        let (config, params, train_ds, eval_ds) = blob_problem(47);
        let tcfg = TrainConfig {
            max_iters: 60,
            batch_size: 12,
            eval_every: 30,
            ..TrainConfig::default()
        };
        let a = train(
            &config,
            params.clone(),
            None,
            &train_ds,
            &eval_ds,
            &tcfg,
            Rng::new(48),
        )
        .unwrap();
        let b = train(
            &config,
            params,
            None,
            &train_ds,
            &eval_ds,
            &tcfg,
            Rng::new(48),
        )
        .unwrap();
        assert_eq!(a.error_curve, b.error_curve);
        for (x, y) in a.params.weights.iter().zip(&b.params.weights) {
            assert_eq!(x.data(), y.data());
        }
    }

    #[test]
    fn divergence_reports_nan_loss_with_context() {
        // A linear network's gradients grow with its weights, so an absurd
        // learning rate compounds to overflow within a few steps.
        let config = NetworkConfig::new(vec![8, 16, 3], Nonlinearity::Linear).unwrap();
        let params = init_network(&config, &InitSpec::new(InitScheme::VsGlorot, 49)).unwrap();
        let mut rng = Rng::new(49 ^ 0xDA7A);
        let train_ds = synthetic_blobs(40, 3, 8, 0.10, &mut rng).unwrap();
        let eval_ds = synthetic_blobs(20, 3, 8, 0.10, &mut rng).unwrap();
        let tcfg = TrainConfig {
            lr0: 1e12,
            max_iters: 50,
            batch_size: 20,
            eval_every: 25,
            ..TrainConfig::default()
        };
        let err = train(
            &config,
            params,
            None,
            &train_ds,
            &eval_ds,
            &tcfg,
            Rng::new(50),
        )
        .unwrap_err();
        match err {
            Error::NanLoss { iteration, lr } => {
                assert!(iteration < 50);
                assert_eq!(lr, 1e12);
            }
            other => panic!("expected NanLoss, got {other:?}"),
        }
    }

    #[test]
    fn random_mask_control_trains_worse_than_dense_here() {
        let (config, params, train_ds, eval_ds) = blob_problem(51);
        let report = random_mask(&config, 0.95, &mut Rng::new(52)).unwrap();
        let tcfg = TrainConfig {
            max_iters: 300,
            batch_size: 20,
            eval_every: 100,
            decay_every: 150,
            ..TrainConfig::default()
        };
        let dense = train(
            &config,
            params.clone(),
            None,
            &train_ds,
            &eval_ds,
            &tcfg,
            Rng::new(53),
        )
        .unwrap();
        let sparse = train(
            &config,
            params,
            Some(&report.mask),
            &train_ds,
            &eval_ds,
            &tcfg,
            Rng::new(53),
        )
        .unwrap();
        assert!(sparse.best_error_pct >= dense.best_error_pct);
    }
}
