//! Fully connected layer: `y = W x + b`.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Weights use row-major `[out_dim, in_dim]` layout.
#[derive(Clone, Debug)]
pub struct FcLayer<T = f32> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

pub struct FcGrads<T> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> FcLayer<T> {
    pub fn new(weights: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        if weights.shape().len() != 2 {
            return Err(Error::InvalidShape(format!(
                "fc weights must be [out, in], got {:?}",
                weights.shape()
            )));
        }
        if bias.shape() != [weights.shape()[0]] {
            return Err(Error::shape_mismatch(
                "fc bias",
                &[weights.shape()[0]],
                bias.shape(),
            ));
        }
        Ok(Self { weights, bias })
    }

    pub fn out_dim(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn in_dim(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        if input.len() != self.in_dim() {
            return Err(Error::shape_mismatch("fc input", &[self.in_dim()], input.shape()));
        }
        let x = input.data();
        let w = self.weights.data();
        let in_dim = self.in_dim();
        let mut out = self.bias.data().to_vec();
        for (o, out_v) in out.iter_mut().enumerate() {
            let row = &w[o * in_dim..(o + 1) * in_dim];
            let mut acc = T::zero();
            for (&wv, &xv) in row.iter().zip(x) {
                acc += wv * xv;
            }
            *out_v += acc;
        }
        Tensor::from_vec(&[self.out_dim()], out)
    }

    pub fn backward(&self, input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<FcGrads<T>> {
        if input.len() != self.in_dim() {
            return Err(Error::shape_mismatch("fc input", &[self.in_dim()], input.shape()));
        }
        if grad_out.len() != self.out_dim() {
            return Err(Error::shape_mismatch(
                "fc grad_out",
                &[self.out_dim()],
                grad_out.shape(),
            ));
        }
        let x = input.data();
        let w = self.weights.data();
        let g = grad_out.data();
        let in_dim = self.in_dim();

        let mut grad_w = vec![T::zero(); w.len()];
        let mut grad_x = vec![T::zero(); in_dim];
        for (o, &gv) in g.iter().enumerate() {
            let w_row = &w[o * in_dim..(o + 1) * in_dim];
            let gw_row = &mut grad_w[o * in_dim..(o + 1) * in_dim];
            for i in 0..in_dim {
                gw_row[i] = gv * x[i];
                grad_x[i] += gv * w_row[i];
            }
        }

        Ok(FcGrads {
            input: Tensor::from_vec(&[in_dim], grad_x)?,
            weights: Tensor::from_vec(self.weights.shape(), grad_w)?,
            bias: Tensor::from_vec(&[self.out_dim()], g.to_vec())?,
        })
    }
}
