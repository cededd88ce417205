//! Softmax with cross-entropy loss, fused for numerical stability.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Debug)]
pub struct SoftmaxCrossEntropy<T> {
    pub probs: Tensor<T>,
    pub loss: T,
    pub grad_logits: Tensor<T>,
}

/// Stable softmax: exponentials of max-subtracted logits, normalized.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Tensor<T> {
    let max = logits
        .data()
        .iter()
        .fold(T::neg_infinity(), |m, &v| if v > m { v } else { m });
    let mut data: Vec<T> = logits.data().iter().map(|&v| (v - max).exp()).collect();
    let sum = data.iter().fold(T::zero(), |acc, &v| acc + v);
    for v in &mut data {
        *v /= sum;
    }
    Tensor::from_vec(logits.shape(), data).expect("same shape as logits")
}

/// Loss is computed in log-sum-exp form, `log(sum exp(l - m)) - (l[label] - m)`,
/// so it stays finite even when the label's probability underflows to zero.
/// The gradient is `probs - one_hot(label)`.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    label: usize,
) -> Result<SoftmaxCrossEntropy<T>> {
    let classes = logits.len();
    if label >= classes {
        return Err(Error::InvalidLabel { label, classes });
    }
    let max = logits
        .data()
        .iter()
        .fold(T::neg_infinity(), |m, &v| if v > m { v } else { m });
    let shifted: Vec<T> = logits.data().iter().map(|&v| v - max).collect();
    let sum = shifted.iter().fold(T::zero(), |acc, &v| acc + v.exp());
    let loss = sum.ln() - shifted[label];

    let probs: Vec<T> = shifted.iter().map(|&v| v.exp() / sum).collect();
    let grad: Vec<T> = probs
        .iter()
        .enumerate()
        .map(|(i, &p)| if i == label { p - T::one() } else { p })
        .collect();

    Ok(SoftmaxCrossEntropy {
        probs: Tensor::from_vec(logits.shape(), probs)?,
        loss,
        grad_logits: Tensor::from_vec(logits.shape(), grad)?,
    })
}
