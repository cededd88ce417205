//! Network configuration, assembly and serialization.

pub mod checkpoint;
pub mod config;
pub mod network;

pub use checkpoint::{load_checkpoint, save_checkpoint, LoadedCheckpoint};
pub use config::{ArchitectureConfig, ShapeChain, CONV_KERNEL, SPATIAL_STRIDE_FLOOR};
pub use network::{build_network, ForwardCaches, Gradients, Network, ParamSpec};
