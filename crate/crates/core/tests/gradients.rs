//! Finite-difference verification of every analytic gradient.
//!
//! All checks run in double precision with central differences
//! (`eps = 1e-5`) and require max relative error <= 1e-4 over at least 100
//! coordinates per layer. The scalar probe loss is `sum(output * R)` for a
//! fixed random tensor `R`, whose gradient w.r.t. the output is exactly `R`.

use scinet_core::layers::{
    softmax_cross_entropy, Activation, ConvLayer, DropoutLayer, FcLayer, Padding,
};
use scinet_core::model::{build_network, ArchitectureConfig, Gradients, Network};
use scinet_core::rng::Rng;
use scinet_core::tensor::Tensor;

const EPS: f64 = 1e-5;
const MAX_REL_ERR: f64 = 1e-4;

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-7 {
        0.0 // both effectively zero
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Probe loss: elementwise dot of `values` with `probe`.
fn dot(values: &Tensor<f64>, probe: &Tensor<f64>) -> f64 {
    values
        .data()
        .iter()
        .zip(probe.data())
        .map(|(&v, &r)| v * r)
        .sum()
}

fn central_diff(mut eval: impl FnMut(f64) -> f64, at: f64) -> f64 {
    (eval(at + EPS) - eval(at - EPS)) / (2.0 * EPS)
}

#[test]
fn conv_gradients_match_finite_differences() {
    let mut rng = Rng::new(101);
    for &(stride, padding) in &[(1, Padding::Half), (2, Padding::Half), (1, Padding::Valid)] {
        let input = Tensor::<f64>::uniform(&mut rng, &[2, 6, 6], -1.0, 1.0).unwrap();
        let kernels = Tensor::<f64>::uniform(&mut rng, &[3, 2, 3, 3], -1.0, 1.0).unwrap();
        let bias = Tensor::<f64>::uniform(&mut rng, &[3], -0.5, 0.5).unwrap();
        let layer = ConvLayer::new(kernels.clone(), bias.clone(), stride, padding).unwrap();
        let out = layer.forward(&input).unwrap();
        let probe = Tensor::<f64>::uniform(&mut rng, out.shape(), -1.0, 1.0).unwrap();
        let grads = layer.backward(&input, &probe).unwrap();

        let mut checked = 0;
        // Kernel coordinates (54 per configuration).
        for i in 0..kernels.len() {
            let numeric = central_diff(
                |v| {
                    let mut k = kernels.clone();
                    k.data_mut()[i] = v;
                    let layer = ConvLayer::new(k, bias.clone(), stride, padding).unwrap();
                    dot(&layer.forward(&input).unwrap(), &probe)
                },
                kernels.data()[i],
            );
            let err = rel_err(grads.kernels.data()[i], numeric);
            assert!(err <= MAX_REL_ERR, "kernel[{i}] rel err {err}");
            checked += 1;
        }
        // Bias coordinates.
        for i in 0..bias.len() {
            let numeric = central_diff(
                |v| {
                    let mut b = bias.clone();
                    b.data_mut()[i] = v;
                    let layer = ConvLayer::new(kernels.clone(), b, stride, padding).unwrap();
                    dot(&layer.forward(&input).unwrap(), &probe)
                },
                bias.data()[i],
            );
            let err = rel_err(grads.bias.data()[i], numeric);
            assert!(err <= MAX_REL_ERR, "bias[{i}] rel err {err}");
            checked += 1;
        }
        // Input coordinates (72 per configuration).
        for i in 0..input.len() {
            let numeric = central_diff(
                |v| {
                    let mut x = input.clone();
                    x.data_mut()[i] = v;
                    dot(&layer.forward(&x).unwrap(), &probe)
                },
                input.data()[i],
            );
            let err = rel_err(grads.input.data()[i], numeric);
            assert!(err <= MAX_REL_ERR, "input[{i}] rel err {err}");
            checked += 1;
        }
        assert!(checked >= 100, "only {checked} coordinates checked");
    }
}

#[test]
fn fc_gradients_match_finite_differences() {
    let mut rng = Rng::new(202);
    let weights = Tensor::<f64>::uniform(&mut rng, &[10, 15], -1.0, 1.0).unwrap();
    let bias = Tensor::<f64>::uniform(&mut rng, &[10], -0.5, 0.5).unwrap();
    let input = Tensor::<f64>::uniform(&mut rng, &[15], -1.0, 1.0).unwrap();
    let layer = FcLayer::new(weights.clone(), bias.clone()).unwrap();
    let probe = Tensor::<f64>::uniform(&mut rng, &[10], -1.0, 1.0).unwrap();
    let grads = layer.backward(&input, &probe).unwrap();

    let mut checked = 0;
    for i in 0..weights.len() {
        let numeric = central_diff(
            |v| {
                let mut w = weights.clone();
                w.data_mut()[i] = v;
                let layer = FcLayer::new(w, bias.clone()).unwrap();
                dot(&layer.forward(&input).unwrap(), &probe)
            },
            weights.data()[i],
        );
        let err = rel_err(grads.weights.data()[i], numeric);
        assert!(err <= MAX_REL_ERR, "weights[{i}] rel err {err}");
        checked += 1;
    }
    for i in 0..bias.len() {
        let numeric = central_diff(
            |v| {
                let mut b = bias.clone();
                b.data_mut()[i] = v;
                let layer = FcLayer::new(weights.clone(), b).unwrap();
                dot(&layer.forward(&input).unwrap(), &probe)
            },
            bias.data()[i],
        );
        let err = rel_err(grads.bias.data()[i], numeric);
        assert!(err <= MAX_REL_ERR, "bias[{i}] rel err {err}");
        checked += 1;
    }
    for i in 0..input.len() {
        let numeric = central_diff(
            |v| {
                let mut x = input.clone();
                x.data_mut()[i] = v;
                dot(&layer.forward(&x).unwrap(), &probe)
            },
            input.data()[i],
        );
        let err = rel_err(grads.input.data()[i], numeric);
        assert!(err <= MAX_REL_ERR, "input[{i}] rel err {err}");
        checked += 1;
    }
    assert!(checked >= 100, "only {checked} coordinates checked");
}

#[test]
fn activation_gradients_match_finite_differences() {
    let mut rng = Rng::new(303);
    for act in [Activation::Relu, Activation::LeakyRelu { alpha: 0.01 }] {
        // Keep samples away from the kink at 0 so the central difference
        // does not straddle it.
        let data: Vec<f64> = (0..128)
            .map(|_| {
                let v = rng.uniform(-1.0, 1.0);
                if v.abs() < 0.01 {
                    v + 0.05 * v.signum()
                } else {
                    v
                }
            })
            .collect();
        let input = Tensor::from_vec(&[128], data).unwrap();
        let probe = Tensor::<f64>::uniform(&mut rng, &[128], -1.0, 1.0).unwrap();
        let grad = act.backward(&input, &probe).unwrap();

        for i in 0..input.len() {
            let numeric = central_diff(
                |v| {
                    let mut x = input.clone();
                    x.data_mut()[i] = v;
                    dot(&act.forward(&x), &probe)
                },
                input.data()[i],
            );
            let err = rel_err(grad.data()[i], numeric);
            assert!(err <= MAX_REL_ERR, "{act:?} input[{i}] rel err {err}");
        }
    }
}

#[test]
fn dropout_gradients_match_finite_differences_with_fixed_mask() {
    let mut rng = Rng::new(404);
    let layer = DropoutLayer::new(0.6).unwrap();
    let input = Tensor::<f64>::uniform(&mut rng, &[128], -1.0, 1.0).unwrap();
    let probe = Tensor::<f64>::uniform(&mut rng, &[128], -1.0, 1.0).unwrap();

    // The mask is a pure function of the dropout rng seed, so re-seeding
    // before every forward keeps it fixed across perturbations.
    let mask_seed = 777;
    let forward = |x: &Tensor<f64>| {
        let mut mask_rng = Rng::new(mask_seed);
        layer.forward(x, true, &mut mask_rng).0
    };
    let (_, mask) = layer.forward(&input, true, &mut Rng::new(mask_seed));
    let grad = layer.backward(mask.as_ref().unwrap(), &probe).unwrap();

    for i in 0..input.len() {
        let numeric = central_diff(
            |v| {
                let mut x = input.clone();
                x.data_mut()[i] = v;
                dot(&forward(&x), &probe)
            },
            input.data()[i],
        );
        let err = rel_err(grad.data()[i], numeric);
        assert!(err <= MAX_REL_ERR, "input[{i}] rel err {err}");
    }
}

#[test]
fn softmax_cross_entropy_gradient_matches_finite_differences() {
    let mut rng = Rng::new(505);
    let logits = Tensor::<f64>::uniform(&mut rng, &[128], -2.0, 2.0).unwrap();
    let label = 17;
    let out = softmax_cross_entropy(&logits, label).unwrap();

    for i in 0..logits.len() {
        let numeric = central_diff(
            |v| {
                let mut l = logits.clone();
                l.data_mut()[i] = v;
                softmax_cross_entropy(&l, label).unwrap().loss
            },
            logits.data()[i],
        );
        let err = rel_err(out.grad_logits.data()[i], numeric);
        assert!(err <= MAX_REL_ERR, "logit[{i}] rel err {err}");
    }
}

/// End-to-end check: the full backward pass through a small network matches
/// finite differences of the cross-entropy loss for a sample of parameters
/// from every tensor.
#[test]
fn whole_network_gradients_match_finite_differences() {
    let cfg = ArchitectureConfig {
        input_channels: 3,
        input_height: 16,
        input_width: 16,
        filters_per_conv: vec![2, 3],
        fc_sizes: vec![8],
        num_classes: 3,
        dropout_keep: 1.0, // keep the loss a deterministic function of parameters
        ..ArchitectureConfig::canonical(3)
    };
    let mut rng = Rng::new(606);
    let net = build_network::<f64>(&cfg, &mut rng).unwrap();
    let patch = Tensor::<f64>::uniform(&mut rng, &[3, 16, 16], 0.0, 1.0).unwrap();
    let label = 2;

    let loss_for = |tensors: Vec<Tensor<f64>>| -> f64 {
        let net = Network::from_parts(&cfg, tensors).unwrap();
        let (_, caches) = net.forward(&patch, true, &mut Rng::new(1)).unwrap();
        softmax_cross_entropy(&caches.unwrap().logits, label).unwrap().loss
    };

    let (_, caches) = net.forward(&patch, true, &mut Rng::new(1)).unwrap();
    let mut grads = Gradients::zeros_for(&cfg).unwrap();
    net.backward_into(&caches.unwrap(), label, &mut grads).unwrap();

    let base: Vec<Tensor<f64>> = net.param_tensors().into_iter().cloned().collect();
    let mut coord_rng = Rng::new(707);
    let mut checked = 0;
    for (t_idx, tensor) in base.iter().enumerate() {
        // 13 coordinates per tensor keeps this fast while covering every
        // layer; 8 tensors x 13 > 100 coordinates overall.
        for _ in 0..13 {
            let i = coord_rng.next_below(tensor.len() as u64) as usize;
            let numeric = central_diff(
                |v| {
                    let mut tensors = base.clone();
                    tensors[t_idx].data_mut()[i] = v;
                    loss_for(tensors)
                },
                tensor.data()[i],
            );
            let analytic = grads.tensors()[t_idx].data()[i];
            let err = rel_err(analytic, numeric);
            assert!(
                err <= MAX_REL_ERR,
                "tensor {t_idx} coord {i}: analytic {analytic}, numeric {numeric}, rel err {err}"
            );
            checked += 1;
        }
    }
    assert!(checked >= 100);
}
