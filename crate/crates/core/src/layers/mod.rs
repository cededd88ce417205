//! Network building blocks with hand-written forward and backward passes.

use serde::{Deserialize, Serialize};

pub mod activation;
pub mod conv;
pub mod dropout;
pub mod fc;
pub mod pool;
pub mod softmax;

pub use activation::Activation;
pub use conv::{ConvGrads, ConvLayer};
pub use dropout::{DropoutLayer, DropoutMask};
pub use fc::{FcGrads, FcLayer};
pub use pool::{MaxPoolLayer, MaxPoolCache};
pub use softmax::{softmax, softmax_cross_entropy, SoftmaxCrossEntropy};

/// Spatial padding mode shared by convolution and pooling.
///
/// `Half` pads so the output extent is `ceil(input / stride)`; `Valid` uses no
/// padding and requires the input to cover the window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    Half,
    Valid,
}
