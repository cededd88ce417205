//! Declarative network description and its shape arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::conv::spatial_out;
use crate::layers::{Activation, DropoutLayer, Padding};

/// Kernel spatial extent of every convolution.
pub const CONV_KERNEL: usize = 3;

/// Once the spatial extent drops to this floor, additional convolutions run at
/// stride 1 so deep variants stay buildable on 32x32 inputs.
pub const SPATIAL_STRIDE_FLOOR: usize = 4;

/// Everything needed to build a [`crate::model::Network`]: input geometry,
/// conv stack, pooling, fully connected sizes, class count and dropout.
///
/// Conv depth is the length of `filters_per_conv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureConfig {
    pub input_channels: usize,
    pub input_height: usize,
    pub input_width: usize,
    pub filters_per_conv: Vec<usize>,
    pub activation: Activation,
    pub conv_stride: usize,
    pub conv_padding: Padding,
    pub pool_window: usize,
    pub pool_stride: usize,
    pub pool_padding: Padding,
    pub fc_sizes: Vec<usize>,
    pub num_classes: usize,
    pub dropout_keep: f64,
}

impl ArchitectureConfig {
    /// The reference architecture: two stride-2 convs (32 and 64 filters,
    /// 3x3 kernels, half padding), one 3x3 stride-2 max pool, FC sizes
    /// 256 and 512, Leaky ReLU (slope 0.01), dropout keep 0.5.
    ///
    /// The filter counts are a free parameter of this implementation and are
    /// echoed in every report.
    pub fn canonical(num_classes: usize) -> Self {
        Self {
            input_channels: 3,
            input_height: 32,
            input_width: 32,
            filters_per_conv: vec![32, 64],
            activation: Activation::LeakyRelu { alpha: 0.01 },
            conv_stride: 2,
            conv_padding: Padding::Half,
            pool_window: 3,
            pool_stride: 2,
            pool_padding: Padding::Half,
            fc_sizes: vec![256, 512],
            num_classes,
            dropout_keep: 0.5,
        }
    }

    /// Default filter counts for a given conv depth: 32 for the first half of
    /// the stack, 64 for the rest (depth 1 -> [32], 2 -> [32, 64],
    /// 4 -> [32, 32, 64, 64]).
    pub fn default_filters_for_depth(depth: usize) -> Result<Vec<usize>> {
        if depth == 0 {
            return Err(Error::Config("conv depth must be >= 1".into()));
        }
        let first_half = depth.div_ceil(2);
        Ok((0..depth)
            .map(|i| if i < first_half { 32 } else { 64 })
            .collect())
    }

    /// Canonical config with a different conv depth.
    pub fn canonical_with_depth(num_classes: usize, depth: usize) -> Result<Self> {
        let mut cfg = Self::canonical(num_classes);
        cfg.filters_per_conv = Self::default_filters_for_depth(depth)?;
        Ok(cfg)
    }

    pub fn conv_depth(&self) -> usize {
        self.filters_per_conv.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0 || self.input_height == 0 || self.input_width == 0 {
            return Err(Error::Config(format!(
                "input dimensions must be >= 1, got {}x{}x{}",
                self.input_channels, self.input_height, self.input_width
            )));
        }
        if self.filters_per_conv.is_empty() {
            return Err(Error::Config("at least one conv layer is required".into()));
        }
        if self.filters_per_conv.contains(&0) {
            return Err(Error::Config("filter counts must be >= 1".into()));
        }
        if self.fc_sizes.contains(&0) {
            return Err(Error::Config("fc sizes must be >= 1".into()));
        }
        if self.num_classes == 0 {
            return Err(Error::Config("num_classes must be >= 1".into()));
        }
        if self.conv_stride == 0 || self.pool_stride == 0 || self.pool_window == 0 {
            return Err(Error::Config("strides and pool window must be >= 1".into()));
        }
        self.activation.validate()?;
        DropoutLayer::new(self.dropout_keep)?;
        Ok(())
    }

    /// Spatial sizes through the network; errors if any stage is unbuildable.
    pub fn shape_chain(&self) -> Result<ShapeChain> {
        self.validate()?;
        let mut height = self.input_height;
        let mut width = self.input_width;
        let mut conv_spatial = Vec::with_capacity(self.conv_depth());
        let mut conv_strides = Vec::with_capacity(self.conv_depth());
        for _ in &self.filters_per_conv {
            let stride = if height.min(width) <= SPATIAL_STRIDE_FLOOR {
                1
            } else {
                self.conv_stride
            };
            let (out_h, _) = spatial_out(height, CONV_KERNEL, stride, self.conv_padding)
                .map_err(|e| Error::Config(format!("conv stage unbuildable: {e}")))?;
            let (out_w, _) = spatial_out(width, CONV_KERNEL, stride, self.conv_padding)
                .map_err(|e| Error::Config(format!("conv stage unbuildable: {e}")))?;
            height = out_h;
            width = out_w;
            conv_spatial.push((height, width));
            conv_strides.push(stride);
        }
        let (pool_h, _) = spatial_out(height, self.pool_window, self.pool_stride, self.pool_padding)
            .map_err(|e| Error::Config(format!("pool stage unbuildable: {e}")))?;
        let (pool_w, _) = spatial_out(width, self.pool_window, self.pool_stride, self.pool_padding)
            .map_err(|e| Error::Config(format!("pool stage unbuildable: {e}")))?;
        let flatten = self.filters_per_conv[self.conv_depth() - 1] * pool_h * pool_w;
        Ok(ShapeChain {
            conv_spatial,
            conv_strides,
            pool_out: (pool_h, pool_w),
            flatten,
        })
    }
}

/// Resolved intermediate shapes of a buildable configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeChain {
    /// Spatial (height, width) after each conv.
    pub conv_spatial: Vec<(usize, usize)>,
    /// Effective stride used by each conv (see [`SPATIAL_STRIDE_FLOOR`]).
    pub conv_strides: Vec<usize>,
    pub pool_out: (usize, usize),
    pub flatten: usize,
}
