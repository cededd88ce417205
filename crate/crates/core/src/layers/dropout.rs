//! Inverted dropout: surviving activations are scaled by `1 / keep_prob` at
//! training time, so inference is exactly the identity.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DropoutLayer {
    pub keep_prob: f64,
}

/// Cached multiplier mask from one training forward pass; elements are 0 or
/// `1 / keep_prob`.
#[derive(Clone, Debug)]
pub struct DropoutMask<T>(Tensor<T>);

impl DropoutLayer {
    pub fn new(keep_prob: f64) -> Result<Self> {
        if !(keep_prob > 0.0 && keep_prob <= 1.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "dropout keep probability must be in (0, 1], got {keep_prob}"
            )));
        }
        Ok(Self { keep_prob })
    }

    /// Training mode draws one uniform per element (kept when `u < p`);
    /// inference returns the input unchanged and no mask.
    pub fn forward<T: Scalar>(
        &self,
        input: &Tensor<T>,
        training: bool,
        rng: &mut Rng,
    ) -> (Tensor<T>, Option<DropoutMask<T>>) {
        if !training {
            return (input.clone(), None);
        }
        let inv_keep = T::from_f64(1.0 / self.keep_prob);
        let factors: Vec<T> = (0..input.len())
            .map(|_| {
                if rng.next_f64() < self.keep_prob {
                    inv_keep
                } else {
                    T::zero()
                }
            })
            .collect();
        let mask = Tensor::from_vec(input.shape(), factors).expect("mask matches input shape");
        let out = apply(input, &mask);
        (out, Some(DropoutMask(mask)))
    }

    /// Backward applies the same cached mask to the upstream gradient.
    pub fn backward<T: Scalar>(&self, mask: &DropoutMask<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        if mask.0.shape() != grad_out.shape() {
            return Err(Error::shape_mismatch(
                "dropout backward",
                mask.0.shape(),
                grad_out.shape(),
            ));
        }
        Ok(apply(grad_out, &mask.0))
    }
}

fn apply<T: Scalar>(values: &Tensor<T>, mask: &Tensor<T>) -> Tensor<T> {
    let data = values
        .data()
        .iter()
        .zip(mask.data())
        .map(|(&v, &m)| v * m)
        .collect();
    Tensor::from_vec(values.shape(), data).expect("shapes already checked")
}
