//! Property tests tying the pieces together: algebraic invariants that must
//! hold for arbitrary shapes, seeds, and sparsities, not just the fixtures
//! used in unit tests.

use isoprune_core::data::{synthetic_blobs, Batches};
use isoprune_core::init::{init_network, InitScheme, InitSpec};
use isoprune_core::isometry::spectrum;
use isoprune_core::network::{
    apply_mask, backward, factorization_check, forward, io_jacobian, NetworkConfig, Nonlinearity,
};
use isoprune_core::saliency::{
    connection_sensitivity, loss_grad_logits, random_mask, retained_count, select_topk,
    softmax_rows, LossKind, SaliencyMap,
};
use isoprune_core::trainer::{learning_rate, TrainConfig};
use isoprune_core::linalg::decomp::{qr_orthonormal, svd};
use isoprune_core::{Matrix, Rng};
use proptest::prelude::*;

fn small_dim() -> impl Strategy<Value = usize> {
    1usize..7
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-3.0f64..3.0, rows * cols)
        .prop_map(move |data| Matrix::from_vec(rows, cols, data).unwrap())
}

fn matrix_chain() -> impl Strategy<Value = (Matrix, Matrix, Matrix)> {
    (small_dim(), small_dim(), small_dim(), small_dim()).prop_flat_map(|(m, k, n, p)| {
        (matrix(m, k), matrix(k, n), matrix(n, p))
    })
}

fn net_case() -> impl Strategy<Value = (Vec<usize>, Nonlinearity, u64)> {
    (
        proptest::collection::vec(2usize..6, 3..5),
        prop_oneof![
            Just(Nonlinearity::Linear),
            Just(Nonlinearity::Tanh),
            Just(Nonlinearity::Relu)
        ],
        0u64..u64::MAX / 2,
    )
}

fn build_net(
    widths: &[usize],
    phi: Nonlinearity,
    seed: u64,
) -> (NetworkConfig, isoprune_core::network::NetworkParams) {
    let config = NetworkConfig::new(widths.to_vec(), phi).unwrap();
    let params = init_network(
        &config,
        &InitSpec::new(InitScheme::ScaledGaussian { gamma: 0.8 }, seed),
    )
    .unwrap();
    (config, params)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matmul_is_associative_within_roundoff((a, b, c) in matrix_chain()) {
        let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        let scale = left.frobenius().max(right.frobenius()).max(1.0);
        prop_assert!(left.max_abs_diff(&right) <= 1e-9 * scale);
    }

    #[test]
    fn svd_reconstructs_and_orders((m, n, seed) in (1usize..7, 1usize..7, 0u64..1 << 40)) {
        let a = Rng::new(seed).gaussian_matrix(m, n, 1.0);
        let res = svd(&a).unwrap();
        let p = m.min(n);
        prop_assert_eq!(res.singular_values.len(), p);
        for w in res.singular_values.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        prop_assert!(res.singular_values.iter().all(|&s| s >= 0.0));
        // A == U diag(s) V^T
        let mut us = res.u.clone();
        for i in 0..us.rows() {
            for (j, x) in us.row_mut(i).iter_mut().enumerate() {
                *x *= res.singular_values[j];
            }
        }
        let recon = us.matmul(&res.v.transpose()).unwrap();
        prop_assert!(a.max_abs_diff(&recon) <= 1e-10 * a.frobenius().max(1.0));
    }

    #[test]
    fn qr_factor_is_orthonormal((m, seed) in (1usize..8, 0u64..1 << 40)) {
        let a = Rng::new(seed).gaussian_matrix(m, m, 1.0);
        let q = qr_orthonormal(&a).unwrap();
        let gram = q.transpose().matmul(&q).unwrap();
        prop_assert!(gram.max_abs_diff(&Matrix::identity(m)) <= 1e-12);
    }

    #[test]
    fn masked_forward_equals_forward_of_masked_params(
        (widths, phi, seed) in net_case(),
        kappa in 0.0f64..0.95,
    ) {
        let (config, params) = build_net(&widths, phi, seed);
        let report = random_mask(&config, kappa, &mut Rng::new(seed ^ 0x5A5A)).unwrap();
        let inputs = Rng::new(seed ^ 0xF00D).gaussian_matrix(3, widths[0], 1.0);
        let via_mask = forward(&config, &params, Some(&report.mask), &inputs).unwrap();
        let premasked = apply_mask(&params, &report.mask).unwrap();
        let via_params = forward(&config, &premasked, None, &inputs).unwrap();
        prop_assert_eq!(via_mask.logits().data(), via_params.logits().data());
    }

    #[test]
    fn sensitivity_equals_weight_grad_times_weight(
        (widths, phi, seed) in net_case(),
    ) {
        let (config, params) = build_net(&widths, phi, seed);
        let n_classes = *widths.last().unwrap();
        let data = synthetic_blobs(3, n_classes.max(2), widths[0].max(n_classes.max(2)), 0.2,
            &mut Rng::new(seed ^ 0xBEEF));
        prop_assume!(data.is_ok());
        let data = data.unwrap();
        prop_assume!(data.dim() == widths[0] && data.n_classes == n_classes);
        let sal = connection_sensitivity(&config, &params, &data, LossKind::GtCrossEntropy,
            data.len());
        // A relu net whose units all die has no sensitivity signal anywhere.
        prop_assume!(!matches!(sal, Err(isoprune_core::Error::DegenerateSaliency)));
        let sal = sal.unwrap();
        // One whole-dataset batch: dL/dc must equal (dL/dW_eff) .* W exactly.
        let trace = forward(&config, &params, None, &data.inputs).unwrap();
        let grad = loss_grad_logits(trace.logits(), Some(&data.labels),
            LossKind::GtCrossEntropy).unwrap();
        let grads = backward(&params, None, &trace, &grad).unwrap();
        let n = data.len() as f64;
        for (raw, (g, w)) in sal.raw.iter().zip(grads.d_weights.iter().zip(&params.weights)) {
            let direct = g.map(|x| x * n).hadamard(w).unwrap();
            prop_assert!(raw.max_abs_diff(&direct) <= 1e-12 * raw.frobenius().max(1.0));
        }
    }

    #[test]
    fn weight_gradients_match_their_factorized_forms(
        (widths, phi, seed) in net_case(),
    ) {
        let config = NetworkConfig::new(widths.clone(), phi).unwrap();
        let mut spec = InitSpec::new(InitScheme::ScaledGaussian { gamma: 0.8 }, seed);
        spec.sigma_b = 0.3;
        let params = init_network(&config, &spec).unwrap();
        let x = Rng::new(seed ^ 0xACE).gaussian_matrix(1, widths[0], 1.0);
        let trace = forward(&config, &params, None, &x).unwrap();
        let label = vec![seed as usize % widths.last().unwrap()];
        let grad = loss_grad_logits(trace.logits(), Some(&label),
            LossKind::GtCrossEntropy).unwrap();
        let dev = factorization_check(&config, &params, &trace, &grad).unwrap();
        prop_assert!(dev.compact < 1e-10, "compact form deviates by {}", dev.compact);
        match dev.linear_form {
            Some(d) => {
                prop_assert_eq!(phi, Nonlinearity::Linear);
                prop_assert!(d < 1e-10, "input-referred form deviates by {d}");
            }
            None => prop_assert!(phi != Nonlinearity::Linear),
        }
    }

    #[test]
    fn topk_keeps_the_stated_count_and_is_idempotent(
        (widths, phi, seed) in net_case(),
        kappa in 0.0f64..0.95,
    ) {
        let (config, params) = build_net(&widths, phi, seed);
        let _ = config;
        let scores: Vec<Matrix> = params
            .weights
            .iter()
            .map(|w| {
                let mut r = Rng::new(seed ^ w.rows() as u64);
                Matrix::from_fn(w.rows(), w.cols(), |_, _| r.next_f64())
            })
            .collect();
        let total: f64 = scores.iter().map(|m| m.data().iter().sum::<f64>()).sum();
        let normalized: Vec<Matrix> = scores.iter().map(|m| m.map(|x| x / total)).collect();
        let sal = SaliencyMap { raw: normalized.clone(), scores: normalized };
        let report = select_topk(&sal, kappa).unwrap();
        let m: usize = params.weights.iter().map(|w| w.data().len()).sum();
        prop_assert_eq!(report.retained_weights, retained_count(m, kappa));
        prop_assert_eq!(report.mask.retained(), report.retained_weights);
        let again = select_topk(&sal, kappa).unwrap();
        prop_assert_eq!(report.mask, again.mask);
    }

    #[test]
    fn retained_count_is_monotone_in_sparsity(total in 1usize..200_000) {
        let mut last = total;
        for k in 1..20 {
            let kappa = k as f64 / 20.0;
            let r = retained_count(total, kappa);
            prop_assert!(r <= last);
            prop_assert!(r <= total);
            last = r;
        }
    }

    #[test]
    fn disconnected_masks_zero_the_jacobian(
        (widths, phi, seed) in net_case(),
    ) {
        let (config, params) = build_net(&widths, phi, seed);
        // Keep almost nothing so disconnection actually happens sometimes.
        let report = random_mask(&config, 0.94, &mut Rng::new(seed ^ 0xD15C)).unwrap();
        prop_assume!(report.disconnected);
        let x = Rng::new(seed ^ 0x1234).gaussian_matrix(1, widths[0], 1.0);
        let trace = forward(&config, &params, Some(&report.mask), &x).unwrap();
        let jac = io_jacobian(&params, Some(&report.mask), &trace).unwrap();
        prop_assert!(jac.data().iter().all(|&v| v == 0.0));
        let spec = spectrum(&config, &params, Some(&report.mask), &x, 1).unwrap();
        prop_assert!(spec.condition_number.is_infinite());
    }

    #[test]
    fn softmax_gradient_rows_sum_to_zero(
        (rows, cols, seed) in (1usize..6, 2usize..8, 0u64..1 << 40)
    ) {
        let logits = Rng::new(seed).gaussian_matrix(rows, cols, 3.0);
        let labels: Vec<usize> = (0..rows).map(|i| i % cols).collect();
        for kind in [LossKind::GtCrossEntropy, LossKind::UniformTarget, LossKind::PredSoftmax] {
            let g = loss_grad_logits(&logits, Some(&labels), kind).unwrap();
            for i in 0..rows {
                let s: f64 = g.row(i).iter().sum();
                prop_assert!(s.abs() < 1e-12, "{}: row {i} sums to {s}", kind.name());
            }
        }
        let p = softmax_rows(&logits);
        for i in 0..rows {
            prop_assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn batches_partition_every_epoch(
        (n, batch, seed) in (2usize..40, 1usize..40, 0u64..1 << 40)
    ) {
        prop_assume!(batch <= n);
        let data = synthetic_blobs(n, 2, 4, 0.1, &mut Rng::new(seed)).unwrap();
        let mut batches = Batches::new(&data, batch, Rng::new(seed ^ 1)).unwrap();
        for _ in 0..2 {
            let mut seen = 0usize;
            let mut signature: Vec<u64> = Vec::new();
            while seen < data.len() {
                let (bx, by) = batches.next_batch();
                prop_assert_eq!(bx.rows(), by.len());
                seen += by.len();
                for i in 0..bx.rows() {
                    signature.push(bx.row(i)[0].to_bits());
                }
            }
            prop_assert_eq!(seen, data.len());
            // Each epoch visits exactly the same multiset of examples.
            let mut expected: Vec<u64> =
                (0..data.len()).map(|i| data.inputs.row(i)[0].to_bits()).collect();
            signature.sort_unstable();
            expected.sort_unstable();
            prop_assert_eq!(signature, expected);
        }
    }

    #[test]
    fn learning_rate_matches_closed_form(
        (de, iters) in (1usize..5000, 0usize..100_000)
    ) {
        let tcfg = TrainConfig { decay_every: de, ..TrainConfig::default() };
        let lr = learning_rate(&tcfg, iters);
        prop_assert_eq!(lr, 0.1 * 0.1f64.powi((iters / de) as i32));
    }

    #[test]
    fn gradient_matches_finite_differences(
        (widths, phi, seed) in net_case(),
    ) {
        let (config, params) = build_net(&widths, phi, seed);
        let n_in = widths[0];
        let n_out = *widths.last().unwrap();
        let inputs = Rng::new(seed ^ 0xACE).gaussian_matrix(2, n_in, 1.0);
        let labels = vec![0usize, n_out - 1];
        let loss_of = |p: &isoprune_core::network::NetworkParams| {
            let t = forward(&config, p, None, &inputs).unwrap();
            isoprune_core::saliency::cross_entropy_mean(t.logits(), &labels)
        };
        let trace = forward(&config, &params, None, &inputs).unwrap();
        let grad = loss_grad_logits(trace.logits(), Some(&labels),
            LossKind::GtCrossEntropy).unwrap();
        let grads = backward(&params, None, &trace, &grad).unwrap();
        // Probe a handful of coordinates per layer rather than all of them.
        let h = 1e-6;
        let mut pick = Rng::new(seed ^ 0xCAFE);
        for l in 0..params.weights.len() {
            for _ in 0..3 {
                let i = pick.next_below(params.weights[l].rows());
                let j = pick.next_below(params.weights[l].cols());
                if phi == Nonlinearity::Relu {
                    // Skip probes that straddle a relu kink.
                    let near_kink = trace.pre.iter().any(|m| {
                        m.data().iter().any(|&v| v.abs() < 1e-4)
                    });
                    if near_kink {
                        continue;
                    }
                }
                let mut plus = params.clone();
                plus.weights[l][(i, j)] += h;
                let mut minus = params.clone();
                minus.weights[l][(i, j)] -= h;
                let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
                let an = grads.d_weights[l][(i, j)];
                prop_assert!(
                    (fd - an).abs() <= 1e-5 * fd.abs().max(an.abs()).max(1e-3),
                    "layer {} ({},{}): fd {} vs analytic {}", l, i, j, fd, an
                );
            }
        }
    }
}
