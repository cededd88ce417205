//! A from-scratch CNN engine for source camera identification.
//!
//! The crate covers the full experiment pipeline: dense tensors with a
//! deterministic random source, layers with hand-written gradients
//! (convolution, Leaky ReLU, max pooling, fully connected, inverted dropout,
//! softmax cross-entropy), declarative network assembly with versioned
//! checkpoints, the 32x32 patch pipeline with image-level split hygiene, a
//! synthetic PRNU-style camera simulator, and mini-batch momentum SGD with
//! 10-fold cross-validation and ablation sweeps.
//!
//! Everything is deterministic per seed: gradient reduction uses a fixed
//! chunked summation order, so results do not depend on thread count or on
//! whether the `parallel` feature (rayon) is enabled.

pub mod data;
pub mod error;
pub mod exec;
pub mod hash;
pub mod layers;
pub mod model;
pub mod rng;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use rng::Rng;
pub use tensor::{Scalar, Tensor};
