//! ReLU-family activations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Element-wise activation: `x` for `x >= 0`, `slope * x` for `x < 0`,
/// where the slope is 0 for ReLU and `alpha` for Leaky ReLU.
///
/// The gradient at exactly 0 uses the non-negative branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu { alpha: f64 },
}

impl Activation {
    /// Leaky ReLU with validated negative slope (`0 <= alpha < 1`).
    pub fn leaky(alpha: f64) -> Result<Self> {
        let act = Activation::LeakyRelu { alpha };
        act.validate()?;
        Ok(act)
    }

    pub fn validate(&self) -> Result<()> {
        if let Activation::LeakyRelu { alpha } = *self {
            if !(0.0..1.0).contains(&alpha) || !alpha.is_finite() {
                return Err(Error::InvalidHyperparameter(format!(
                    "leaky relu slope must be in [0, 1), got {alpha}"
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::LeakyRelu { .. } => "leaky_relu",
        }
    }

    fn negative_slope<T: Scalar>(&self) -> T {
        match *self {
            Activation::Relu => T::zero(),
            Activation::LeakyRelu { alpha } => T::from_f64(alpha),
        }
    }

    pub fn forward<T: Scalar>(&self, input: &Tensor<T>) -> Tensor<T> {
        let slope = self.negative_slope::<T>();
        input.map(|x| if x >= T::zero() { x } else { slope * x })
    }

    /// Backward pass; `input` is the tensor the forward pass saw.
    pub fn backward<T: Scalar>(&self, input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        if input.shape() != grad_out.shape() {
            return Err(Error::shape_mismatch(
                "activation backward",
                input.shape(),
                grad_out.shape(),
            ));
        }
        let slope = self.negative_slope::<T>();
        let data = input
            .data()
            .iter()
            .zip(grad_out.data())
            .map(|(&x, &g)| if x >= T::zero() { g } else { slope * g })
            .collect();
        Tensor::from_vec(input.shape(), data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(act: Activation, x: f64) -> f64 {
        act.forward::<f64>(&Tensor::from_vec(&[1], vec![x]).unwrap()).data()[0]
    }

    #[test]
    fn positive_branch_is_identity() {
        assert_eq!(scalar(Activation::leaky(0.01).unwrap(), 2.0), 2.0);
        assert_eq!(scalar(Activation::Relu, 2.0), 2.0);
    }

    #[test]
    fn negative_branch_scales_by_alpha() {
        assert_eq!(scalar(Activation::leaky(0.01).unwrap(), -1.0), -0.01);
    }

    #[test]
    fn relu_kills_negative_values_and_gradients() {
        let act = Activation::Relu;
        let x = Tensor::from_vec(&[1], vec![-1.0f64]).unwrap();
        assert_eq!(act.forward(&x).data()[0], 0.0);
        let g = Tensor::from_vec(&[1], vec![3.0f64]).unwrap();
        assert_eq!(act.backward(&x, &g).unwrap().data()[0], 0.0);
    }

    #[test]
    fn gradient_at_zero_uses_nonnegative_branch() {
        let act = Activation::leaky(0.25).unwrap();
        let x = Tensor::from_vec(&[1], vec![0.0f64]).unwrap();
        let g = Tensor::from_vec(&[1], vec![2.0f64]).unwrap();
        assert_eq!(act.backward(&x, &g).unwrap().data()[0], 2.0);
    }

    #[test]
    fn leaky_backward_is_nonzero_on_negatives() {
        let act = Activation::leaky(0.01).unwrap();
        let x = Tensor::from_vec(&[3], vec![-5.0f64, -0.1, 4.0]).unwrap();
        let g = Tensor::new(&[3], 1.0f64).unwrap();
        let back = act.backward(&x, &g).unwrap();
        assert!(back.data().iter().all(|&v| v != 0.0));
    }

    #[test]
    fn alpha_is_validated() {
        assert!(Activation::leaky(1.0).is_err());
        assert!(Activation::leaky(-0.1).is_err());
        assert!(Activation::leaky(0.0).is_ok());
    }
}
