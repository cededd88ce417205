//! 2-D convolution over [channels, height, width] inputs.
//!
//! The layer computes cross-correlation; for learned kernels this is
//! equivalent to true convolution because training absorbs the kernel flip.
//! The forward pass lowers the input to a column matrix (im2col) and runs the
//! kernels as a single matrix product, which keeps the inner loops flat and
//! vectorizable.

use crate::error::{Error, Result};
use crate::layers::Padding;
use crate::tensor::{Scalar, Tensor};

/// Output size and leading pad for one spatial axis.
///
/// Half padding produces `ceil(in / stride)` outputs; the total pad is split
/// with the smaller half in front (so even inputs at stride 2 pad only at the
/// trailing edge). Valid padding requires `in >= window`.
pub(crate) fn spatial_out(
    in_dim: usize,
    window: usize,
    stride: usize,
    padding: Padding,
) -> Result<(usize, usize)> {
    debug_assert!(stride >= 1 && window >= 1);
    match padding {
        Padding::Half => {
            let out = in_dim.div_ceil(stride);
            let span = (out - 1) * stride + window;
            let pad_total = span.saturating_sub(in_dim);
            Ok((out, pad_total / 2))
        }
        Padding::Valid => {
            if in_dim < window {
                return Err(Error::InvalidShape(format!(
                    "input extent {in_dim} is smaller than window {window} in valid mode"
                )));
            }
            Ok(((in_dim - window) / stride + 1, 0))
        }
    }
}

/// Convolution layer parameters. Kernels are `[out_channels, in_channels, kh, kw]`.
#[derive(Clone, Debug)]
pub struct ConvLayer<T = f32> {
    pub kernels: Tensor<T>,
    pub bias: Tensor<T>,
    pub stride: usize,
    pub padding: Padding,
}

/// Gradients of one conv layer from one backward pass.
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub kernels: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> ConvLayer<T> {
    pub fn new(kernels: Tensor<T>, bias: Tensor<T>, stride: usize, padding: Padding) -> Result<Self> {
        if kernels.shape().len() != 4 {
            return Err(Error::InvalidShape(format!(
                "conv kernels must be [out, in, kh, kw], got {:?}",
                kernels.shape()
            )));
        }
        if bias.shape() != [kernels.shape()[0]] {
            return Err(Error::shape_mismatch(
                "conv bias",
                &[kernels.shape()[0]],
                bias.shape(),
            ));
        }
        if stride == 0 {
            return Err(Error::InvalidHyperparameter("conv stride must be >= 1".into()));
        }
        Ok(Self {
            kernels,
            bias,
            stride,
            padding,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape()[1]
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<(usize, usize, usize)> {
        let shape = input.shape();
        if shape.len() != 3 {
            return Err(Error::InvalidShape(format!(
                "conv input must be [channels, height, width], got {shape:?}"
            )));
        }
        if shape[0] != self.in_channels() {
            return Err(Error::shape_mismatch(
                "conv input channels",
                &[self.in_channels()],
                &[shape[0]],
            ));
        }
        Ok((shape[0], shape[1], shape[2]))
    }

    /// Shape of the forward output for a given input shape.
    pub fn output_shape(&self, input_shape: &[usize]) -> Result<[usize; 3]> {
        let (kh, kw) = (self.kernels.shape()[2], self.kernels.shape()[3]);
        let (out_h, _) = spatial_out(input_shape[1], kh, self.stride, self.padding)?;
        let (out_w, _) = spatial_out(input_shape[2], kw, self.stride, self.padding)?;
        Ok([self.out_channels(), out_h, out_w])
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let (channels, in_h, in_w) = self.check_input(input)?;
        let (kh, kw) = (self.kernels.shape()[2], self.kernels.shape()[3]);
        let (out_h, pad_h) = spatial_out(in_h, kh, self.stride, self.padding)?;
        let (out_w, pad_w) = spatial_out(in_w, kw, self.stride, self.padding)?;

        let positions = out_h * out_w;
        let k_len = channels * kh * kw;
        let col = im2col(
            input.data(),
            channels,
            in_h,
            in_w,
            kh,
            kw,
            self.stride,
            pad_h,
            pad_w,
            out_h,
            out_w,
        );

        let filters = self.out_channels();
        let kernels = self.kernels.data();
        let bias = self.bias.data();
        let mut out = vec![T::zero(); filters * positions];
        for f in 0..filters {
            let out_row = &mut out[f * positions..(f + 1) * positions];
            out_row.fill(bias[f]);
            let w_row = &kernels[f * k_len..(f + 1) * k_len];
            for (k, &w) in w_row.iter().enumerate() {
                let col_row = &col[k * positions..(k + 1) * positions];
                for (o, &c) in out_row.iter_mut().zip(col_row) {
                    *o += w * c;
                }
            }
        }
        Tensor::from_vec(&[filters, out_h, out_w], out)
    }

    /// Analytic gradients w.r.t. input, kernels and bias.
    pub fn backward(&self, input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<ConvGrads<T>> {
        let (channels, in_h, in_w) = self.check_input(input)?;
        let (kh, kw) = (self.kernels.shape()[2], self.kernels.shape()[3]);
        let (out_h, pad_h) = spatial_out(in_h, kh, self.stride, self.padding)?;
        let (out_w, pad_w) = spatial_out(in_w, kw, self.stride, self.padding)?;
        let filters = self.out_channels();
        if grad_out.shape() != [filters, out_h, out_w] {
            return Err(Error::shape_mismatch(
                "conv grad_out",
                &[filters, out_h, out_w],
                grad_out.shape(),
            ));
        }

        let positions = out_h * out_w;
        let k_len = channels * kh * kw;
        let col = im2col(
            input.data(),
            channels,
            in_h,
            in_w,
            kh,
            kw,
            self.stride,
            pad_h,
            pad_w,
            out_h,
            out_w,
        );
        let grad = grad_out.data();
        let kernels = self.kernels.data();

        // bias: sum of grad_out over each output channel.
        let mut grad_bias = vec![T::zero(); filters];
        for f in 0..filters {
            let mut acc = T::zero();
            for &g in &grad[f * positions..(f + 1) * positions] {
                acc += g;
            }
            grad_bias[f] = acc;
        }

        // kernels: grad_out (F x P) times col^T (P x K).
        let mut grad_kernels = vec![T::zero(); filters * k_len];
        for f in 0..filters {
            let g_row = &grad[f * positions..(f + 1) * positions];
            let gk_row = &mut grad_kernels[f * k_len..(f + 1) * k_len];
            for (k, gk) in gk_row.iter_mut().enumerate() {
                let col_row = &col[k * positions..(k + 1) * positions];
                let mut acc = T::zero();
                for (&g, &c) in g_row.iter().zip(col_row) {
                    acc += g * c;
                }
                *gk = acc;
            }
        }

        // input: kernels^T (K x F) times grad_out (F x P), scattered back.
        let mut grad_col = vec![T::zero(); k_len * positions];
        for f in 0..filters {
            let g_row = &grad[f * positions..(f + 1) * positions];
            let w_row = &kernels[f * k_len..(f + 1) * k_len];
            for (k, &w) in w_row.iter().enumerate() {
                let gc_row = &mut grad_col[k * positions..(k + 1) * positions];
                for (gc, &g) in gc_row.iter_mut().zip(g_row) {
                    *gc += w * g;
                }
            }
        }
        let grad_input = col2im(
            &grad_col,
            channels,
            in_h,
            in_w,
            kh,
            kw,
            self.stride,
            pad_h,
            pad_w,
            out_h,
            out_w,
        );

        Ok(ConvGrads {
            input: Tensor::from_vec(&[channels, in_h, in_w], grad_input)?,
            kernels: Tensor::from_vec(self.kernels.shape(), grad_kernels)?,
            bias: Tensor::from_vec(&[filters], grad_bias)?,
        })
    }
}

/// Lowers `[C, H, W]` into a `[C*kh*kw, out_h*out_w]` column matrix.
/// Out-of-bounds (padded) positions contribute zeros.
#[allow(clippy::too_many_arguments)]
fn im2col<T: Scalar>(
    input: &[T],
    channels: usize,
    in_h: usize,
    in_w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad_h: usize,
    pad_w: usize,
    out_h: usize,
    out_w: usize,
) -> Vec<T> {
    let positions = out_h * out_w;
    let mut col = vec![T::zero(); channels * kh * kw * positions];
    let mut row = 0;
    for c in 0..channels {
        let plane = &input[c * in_h * in_w..(c + 1) * in_h * in_w];
        for ky in 0..kh {
            for kx in 0..kw {
                let col_row = &mut col[row * positions..(row + 1) * positions];
                for oy in 0..out_h {
                    let iy = (oy * stride + ky) as isize - pad_h as isize;
                    if iy < 0 || iy >= in_h as isize {
                        continue;
                    }
                    let line = &plane[iy as usize * in_w..(iy as usize + 1) * in_w];
                    let dst = &mut col_row[oy * out_w..(oy + 1) * out_w];
                    for (ox, d) in dst.iter_mut().enumerate() {
                        let ix = (ox * stride + kx) as isize - pad_w as isize;
                        if ix >= 0 && ix < in_w as isize {
                            *d = line[ix as usize];
                        }
                    }
                }
                row += 1;
            }
        }
    }
    col
}

/// Adjoint of [`im2col`]: scatter-adds column gradients back into input layout.
#[allow(clippy::too_many_arguments)]
fn col2im<T: Scalar>(
    col: &[T],
    channels: usize,
    in_h: usize,
    in_w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad_h: usize,
    pad_w: usize,
    out_h: usize,
    out_w: usize,
) -> Vec<T> {
    let positions = out_h * out_w;
    let mut input = vec![T::zero(); channels * in_h * in_w];
    let mut row = 0;
    for c in 0..channels {
        let plane = &mut input[c * in_h * in_w..(c + 1) * in_h * in_w];
        for ky in 0..kh {
            for kx in 0..kw {
                let col_row = &col[row * positions..(row + 1) * positions];
                for oy in 0..out_h {
                    let iy = (oy * stride + ky) as isize - pad_h as isize;
                    if iy < 0 || iy >= in_h as isize {
                        continue;
                    }
                    let line = &mut plane[iy as usize * in_w..(iy as usize + 1) * in_w];
                    let src = &col_row[oy * out_w..(oy + 1) * out_w];
                    for (ox, &s) in src.iter().enumerate() {
                        let ix = (ox * stride + kx) as isize - pad_w as isize;
                        if ix >= 0 && ix < in_w as isize {
                            line[ix as usize] += s;
                        }
                    }
                }
                row += 1;
            }
        }
    }
    input
}
