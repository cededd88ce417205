//! Convolution equivalence against a naive quadruple-loop oracle.
//!
//! The oracle computes true convolution directly from the definition
//! (including the kernel flip), with its own padding arithmetic. The
//! production layer computes cross-correlation through an im2col lowering,
//! so feeding it flipped kernels must reproduce the oracle exactly: the two
//! routes share no code.

use scinet_core::layers::{ConvLayer, Padding};
use scinet_core::rng::Rng;
use scinet_core::tensor::Tensor;

/// True convolution, written as plainly as possible: for every output
/// position the kernel is swept with flipped indices over the padded input.
#[allow(clippy::too_many_arguments)]
fn naive_conv_forward(
    input: &[f64],
    (in_c, in_h, in_w): (usize, usize, usize),
    kernels: &[f64],
    (filters, kh, kw): (usize, usize, usize),
    bias: &[f64],
    stride: usize,
    half_padding: bool,
) -> (Vec<f64>, usize, usize) {
    // Independent padding arithmetic: half padding targets ceil(in/stride)
    // outputs with the smaller pad in front; valid uses none.
    let axis = |n: usize, k: usize| -> (usize, isize) {
        if half_padding {
            let out = n.div_ceil(stride);
            let span = (out - 1) * stride + k;
            let pad_total = span.max(n) - n;
            (out, (pad_total / 2) as isize)
        } else {
            ((n - k) / stride + 1, 0)
        }
    };
    let (out_h, pad_h) = axis(in_h, kh);
    let (out_w, pad_w) = axis(in_w, kw);

    let mut out = vec![0.0; filters * out_h * out_w];
    for f in 0..filters {
        for oy in 0..out_h {
            for ox in 0..out_w {
                let mut acc = bias[f];
                for c in 0..in_c {
                    for m in 0..kh {
                        for n in 0..kw {
                            let iy = (oy * stride + m) as isize - pad_h;
                            let ix = (ox * stride + n) as isize - pad_w;
                            if iy < 0 || iy >= in_h as isize || ix < 0 || ix >= in_w as isize {
                                continue;
                            }
                            // Kernel flip: true convolution indexes the
                            // kernel backwards relative to the input sweep.
                            let k_idx =
                                ((f * in_c + c) * kh + (kh - 1 - m)) * kw + (kw - 1 - n);
                            let i_idx = (c * in_h + iy as usize) * in_w + ix as usize;
                            acc += input[i_idx] * kernels[k_idx];
                        }
                    }
                }
                out[(f * out_h + oy) * out_w + ox] = acc;
            }
        }
    }
    (out, out_h, out_w)
}

fn flip_kernels(kernels: &Tensor<f64>) -> Tensor<f64> {
    let shape = kernels.shape().to_vec();
    let (filters, in_c, kh, kw) = (shape[0], shape[1], shape[2], shape[3]);
    let mut flipped = vec![0.0; kernels.len()];
    let data = kernels.data();
    for f in 0..filters {
        for c in 0..in_c {
            for m in 0..kh {
                for n in 0..kw {
                    flipped[((f * in_c + c) * kh + m) * kw + n] =
                        data[((f * in_c + c) * kh + (kh - 1 - m)) * kw + (kw - 1 - n)];
                }
            }
        }
    }
    Tensor::from_vec(&shape, flipped).unwrap()
}

#[test]
fn optimized_conv_matches_naive_oracle_on_50_random_instances() {
    let mut rng = Rng::new(4242);
    for case in 0..50 {
        let in_c = 1 + rng.next_below(8) as usize;
        let in_h = 3 + rng.next_below(14) as usize; // 3..16
        let in_w = 3 + rng.next_below(14) as usize;
        let filters = 1 + rng.next_below(8) as usize;
        let stride = 1 + rng.next_below(2) as usize; // 1 or 2
        let half = rng.next_below(2) == 0;

        let input = Tensor::<f64>::uniform(&mut rng, &[in_c, in_h, in_w], -1.0, 1.0).unwrap();
        let kernels = Tensor::<f64>::uniform(&mut rng, &[filters, in_c, 3, 3], -1.0, 1.0).unwrap();
        let bias = Tensor::<f64>::uniform(&mut rng, &[filters], -0.5, 0.5).unwrap();

        let (oracle, out_h, out_w) = naive_conv_forward(
            input.data(),
            (in_c, in_h, in_w),
            kernels.data(),
            (filters, 3, 3),
            bias.data(),
            stride,
            half,
        );

        // Cross-correlation with flipped kernels == true convolution.
        let padding = if half { Padding::Half } else { Padding::Valid };
        let layer = ConvLayer::new(flip_kernels(&kernels), bias, stride, padding).unwrap();
        let out = layer.forward(&input).unwrap();

        assert_eq!(out.shape(), &[filters, out_h, out_w], "case {case}");
        for (i, (&a, &b)) in out.data().iter().zip(&oracle).enumerate() {
            assert!(
                (a - b).abs() <= 1e-6,
                "case {case} ({in_c}x{in_h}x{in_w}, f={filters}, s={stride}, half={half}): \
                 element {i} differs: {a} vs {b}"
            );
        }
    }
}

#[test]
fn spec_sized_instance_matches_oracle() {
    // The 1x5x5 input with two 1-channel kernels at stride 2.
    let mut rng = Rng::new(99);
    let input = Tensor::<f64>::uniform(&mut rng, &[1, 5, 5], -1.0, 1.0).unwrap();
    let kernels = Tensor::<f64>::uniform(&mut rng, &[2, 1, 3, 3], -1.0, 1.0).unwrap();
    let bias = Tensor::<f64>::uniform(&mut rng, &[2], -0.5, 0.5).unwrap();
    for half in [true, false] {
        let (oracle, out_h, out_w) = naive_conv_forward(
            input.data(),
            (1, 5, 5),
            kernels.data(),
            (2, 3, 3),
            bias.data(),
            2,
            half,
        );
        let padding = if half { Padding::Half } else { Padding::Valid };
        let layer = ConvLayer::new(flip_kernels(&kernels), bias.clone(), 2, padding).unwrap();
        let out = layer.forward(&input).unwrap();
        assert_eq!(out.shape(), &[2, out_h, out_w]);
        for (&a, &b) in out.data().iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-6);
        }
    }
}

/// For symmetric kernels flipping is a no-op, so correlation and convolution
/// agree directly; a quick cross-check that the flip harness itself is sane.
#[test]
fn flip_is_identity_for_symmetric_kernels() {
    let mut k = Tensor::<f64>::zeros(&[1, 1, 3, 3]).unwrap();
    k.data_mut()[4] = 2.0; // center
    let flipped = flip_kernels(&k);
    assert_eq!(flipped.data(), k.data());
}
