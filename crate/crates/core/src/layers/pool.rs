//! Max pooling with argmax caching for the backward pass.

use crate::error::{Error, Result};
use crate::layers::conv::spatial_out;
use crate::layers::Padding;
use crate::tensor::{Scalar, Tensor};

/// Max pooling over square windows. Padded positions never win a window;
/// ties go to the first position in row-major scan order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxPoolLayer {
    pub window: usize,
    pub stride: usize,
    pub padding: Padding,
}

/// Per-forward record of winning input positions, consumed by the backward pass.
#[derive(Clone, Debug)]
pub struct MaxPoolCache {
    input_shape: Vec<usize>,
    output_shape: Vec<usize>,
    /// Linear input index of the maximum for each output element.
    argmax: Vec<usize>,
}

impl MaxPoolLayer {
    pub fn new(window: usize, stride: usize, padding: Padding) -> Result<Self> {
        if window == 0 || stride == 0 {
            return Err(Error::InvalidHyperparameter(
                "pool window and stride must be >= 1".into(),
            ));
        }
        Ok(Self {
            window,
            stride,
            padding,
        })
    }

    pub fn output_shape(&self, input_shape: &[usize]) -> Result<[usize; 3]> {
        let (out_h, _) = spatial_out(input_shape[1], self.window, self.stride, self.padding)?;
        let (out_w, _) = spatial_out(input_shape[2], self.window, self.stride, self.padding)?;
        Ok([input_shape[0], out_h, out_w])
    }

    pub fn forward<T: Scalar>(&self, input: &Tensor<T>) -> Result<(Tensor<T>, MaxPoolCache)> {
        let shape = input.shape();
        if shape.len() != 3 {
            return Err(Error::InvalidShape(format!(
                "pool input must be [channels, height, width], got {shape:?}"
            )));
        }
        let (channels, in_h, in_w) = (shape[0], shape[1], shape[2]);
        let (out_h, pad_h) = spatial_out(in_h, self.window, self.stride, self.padding)?;
        let (out_w, pad_w) = spatial_out(in_w, self.window, self.stride, self.padding)?;

        let data = input.data();
        let mut out = vec![T::zero(); channels * out_h * out_w];
        let mut argmax = vec![0usize; out.len()];
        for c in 0..channels {
            let plane_off = c * in_h * in_w;
            for oy in 0..out_h {
                for ox in 0..out_w {
                    let mut best = T::neg_infinity();
                    let mut best_idx = usize::MAX;
                    for ky in 0..self.window {
                        let iy = (oy * self.stride + ky) as isize - pad_h as isize;
                        if iy < 0 || iy >= in_h as isize {
                            continue;
                        }
                        for kx in 0..self.window {
                            let ix = (ox * self.stride + kx) as isize - pad_w as isize;
                            if ix < 0 || ix >= in_w as isize {
                                continue;
                            }
                            let idx = plane_off + iy as usize * in_w + ix as usize;
                            let v = data[idx];
                            if v > best || best_idx == usize::MAX {
                                best = v;
                                best_idx = idx;
                            }
                        }
                    }
                    debug_assert_ne!(best_idx, usize::MAX, "window contained no valid position");
                    let o = (c * out_h + oy) * out_w + ox;
                    out[o] = best;
                    argmax[o] = best_idx;
                }
            }
        }

        let output_shape = vec![channels, out_h, out_w];
        Ok((
            Tensor::from_vec(&output_shape, out)?,
            MaxPoolCache {
                input_shape: shape.to_vec(),
                output_shape,
                argmax,
            },
        ))
    }

    /// Routes each upstream gradient to the cached winning position.
    pub fn backward<T: Scalar>(&self, cache: &MaxPoolCache, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        if grad_out.shape() != cache.output_shape {
            return Err(Error::shape_mismatch(
                "pool grad_out",
                &cache.output_shape,
                grad_out.shape(),
            ));
        }
        let mut grad_input = Tensor::zeros(&cache.input_shape)?;
        let gi = grad_input.data_mut();
        for (&idx, &g) in cache.argmax.iter().zip(grad_out.data()) {
            gi[idx] += g;
        }
        Ok(grad_input)
    }
}
