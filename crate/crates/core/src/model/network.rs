//! Network assembly, forward/backward passes, and the flat parameter view
//! shared by the optimizer and the checkpoint format.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{
    softmax, softmax_cross_entropy, Activation, ConvLayer, DropoutLayer, DropoutMask, FcLayer,
    MaxPoolCache, MaxPoolLayer,
};
use crate::model::config::{ArchitectureConfig, ShapeChain, CONV_KERNEL};
use crate::rng::Rng;
use crate::tensor::{Scalar, Tensor};

/// Name and shape of one parameter tensor, in serialization order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

/// A built network. Layer order is fixed: each conv followed by the
/// activation, then max pooling, flatten, and the fully connected stack where
/// every hidden layer is followed by activation and dropout; the final layer
/// feeds softmax.
#[derive(Clone, Debug)]
pub struct Network<T = f32> {
    config: ArchitectureConfig,
    chain: ShapeChain,
    convs: Vec<ConvLayer<T>>,
    pool: MaxPoolLayer,
    fcs: Vec<FcLayer<T>>,
    dropout: DropoutLayer,
}

/// Per-sample intermediate state kept by a training-mode forward pass.
pub struct ForwardCaches<T> {
    conv_inputs: Vec<Tensor<T>>,
    conv_preact: Vec<Tensor<T>>,
    pool_cache: MaxPoolCache,
    fc_inputs: Vec<Tensor<T>>,
    fc_preact: Vec<Tensor<T>>,
    dropout_masks: Vec<DropoutMask<T>>,
    pub logits: Tensor<T>,
}

/// Gradient (or momentum-velocity) buffers mirroring the parameter tensors.
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_for(cfg: &ArchitectureConfig) -> Result<Self> {
        let tensors = Network::<T>::param_specs(cfg)?
            .iter()
            .map(|spec| Tensor::zeros(&spec.shape))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { tensors })
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    /// Element-wise accumulation; shapes must match.
    pub fn add_assign(&mut self, other: &Gradients<T>) {
        debug_assert_eq!(self.tensors.len(), other.tensors.len());
        for (dst, src) in self.tensors.iter_mut().zip(&other.tensors) {
            debug_assert_eq!(dst.shape(), src.shape());
            for (d, &s) in dst.data_mut().iter_mut().zip(src.data()) {
                *d += s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        let f = T::from_f64(factor);
        for t in &mut self.tensors {
            for v in t.data_mut() {
                *v *= f;
            }
        }
    }

    fn accumulate(&mut self, slot: usize, src: &Tensor<T>) {
        let dst = &mut self.tensors[slot];
        debug_assert_eq!(dst.shape(), src.shape());
        for (d, &s) in dst.data_mut().iter_mut().zip(src.data()) {
            *d += s;
        }
    }
}

/// Builds a network from a config with He-style initialization: weights are
/// gaussian with std `sqrt(2 / fan_in)` drawn in parameter order, biases zero.
pub fn build_network<T: Scalar>(cfg: &ArchitectureConfig, rng: &mut Rng) -> Result<Network<T>> {
    let chain = cfg.shape_chain()?;

    let mut convs = Vec::with_capacity(cfg.conv_depth());
    let mut in_channels = cfg.input_channels;
    for (i, &filters) in cfg.filters_per_conv.iter().enumerate() {
        let fan_in = in_channels * CONV_KERNEL * CONV_KERNEL;
        let std = (2.0 / fan_in as f64).sqrt();
        let kernels = Tensor::gaussian(
            rng,
            &[filters, in_channels, CONV_KERNEL, CONV_KERNEL],
            0.0,
            std,
        )?;
        let bias = Tensor::zeros(&[filters])?;
        convs.push(ConvLayer::new(
            kernels,
            bias,
            chain.conv_strides[i],
            cfg.conv_padding,
        )?);
        in_channels = filters;
    }

    let mut fcs = Vec::with_capacity(cfg.fc_sizes.len() + 1);
    let mut in_dim = chain.flatten;
    for &out_dim in cfg.fc_sizes.iter().chain(std::iter::once(&cfg.num_classes)) {
        let std = (2.0 / in_dim as f64).sqrt();
        let weights = Tensor::gaussian(rng, &[out_dim, in_dim], 0.0, std)?;
        let bias = Tensor::zeros(&[out_dim])?;
        fcs.push(FcLayer::new(weights, bias)?);
        in_dim = out_dim;
    }

    Ok(Network {
        pool: MaxPoolLayer::new(cfg.pool_window, cfg.pool_stride, cfg.pool_padding)?,
        dropout: DropoutLayer::new(cfg.dropout_keep)?,
        config: cfg.clone(),
        chain,
        convs,
        fcs,
    })
}

impl<T: Scalar> Network<T> {
    /// Parameter names and shapes in serialization order, derived purely from
    /// the config.
    pub fn param_specs(cfg: &ArchitectureConfig) -> Result<Vec<ParamSpec>> {
        let chain = cfg.shape_chain()?;
        let mut specs = Vec::new();
        let mut in_channels = cfg.input_channels;
        for (i, &filters) in cfg.filters_per_conv.iter().enumerate() {
            specs.push(ParamSpec {
                name: format!("conv{}.kernels", i + 1),
                shape: vec![filters, in_channels, CONV_KERNEL, CONV_KERNEL],
            });
            specs.push(ParamSpec {
                name: format!("conv{}.bias", i + 1),
                shape: vec![filters],
            });
            in_channels = filters;
        }
        let mut in_dim = chain.flatten;
        for (i, &out_dim) in cfg
            .fc_sizes
            .iter()
            .chain(std::iter::once(&cfg.num_classes))
            .enumerate()
        {
            specs.push(ParamSpec {
                name: format!("fc{}.weights", i + 1),
                shape: vec![out_dim, in_dim],
            });
            specs.push(ParamSpec {
                name: format!("fc{}.bias", i + 1),
                shape: vec![out_dim],
            });
            in_dim = out_dim;
        }
        Ok(specs)
    }

    /// Rebuilds a network from parameter tensors in [`Network::param_specs`] order.
    pub fn from_parts(cfg: &ArchitectureConfig, tensors: Vec<Tensor<T>>) -> Result<Self> {
        let chain = cfg.shape_chain()?;
        let specs = Self::param_specs(cfg)?;
        if tensors.len() != specs.len() {
            return Err(Error::Config(format!(
                "expected {} parameter tensors, got {}",
                specs.len(),
                tensors.len()
            )));
        }
        for (spec, tensor) in specs.iter().zip(&tensors) {
            if tensor.shape() != spec.shape {
                return Err(Error::shape_mismatch(&spec.name, &spec.shape, tensor.shape()));
            }
        }
        let mut iter = tensors.into_iter();
        let mut convs = Vec::with_capacity(cfg.conv_depth());
        for i in 0..cfg.conv_depth() {
            let kernels = iter.next().expect("checked length");
            let bias = iter.next().expect("checked length");
            convs.push(ConvLayer::new(
                kernels,
                bias,
                chain.conv_strides[i],
                cfg.conv_padding,
            )?);
        }
        let mut fcs = Vec::with_capacity(cfg.fc_sizes.len() + 1);
        for _ in 0..=cfg.fc_sizes.len() {
            let weights = iter.next().expect("checked length");
            let bias = iter.next().expect("checked length");
            fcs.push(FcLayer::new(weights, bias)?);
        }
        Ok(Network {
            pool: MaxPoolLayer::new(cfg.pool_window, cfg.pool_stride, cfg.pool_padding)?,
            dropout: DropoutLayer::new(cfg.dropout_keep)?,
            config: cfg.clone(),
            chain,
            convs,
            fcs,
        })
    }

    pub fn config(&self) -> &ArchitectureConfig {
        &self.config
    }

    pub fn shape_chain(&self) -> &ShapeChain {
        &self.chain
    }

    pub fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    /// Parameter tensors in serialization order.
    pub fn param_tensors(&self) -> Vec<&Tensor<T>> {
        let mut out = Vec::with_capacity(2 * (self.convs.len() + self.fcs.len()));
        for conv in &self.convs {
            out.push(&conv.kernels);
            out.push(&conv.bias);
        }
        for fc in &self.fcs {
            out.push(&fc.weights);
            out.push(&fc.bias);
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.param_tensors().iter().map(|t| t.len()).sum()
    }

    fn check_input(&self, patch: &Tensor<T>) -> Result<()> {
        let expected = [
            self.config.input_channels,
            self.config.input_height,
            self.config.input_width,
        ];
        if patch.shape() != expected {
            return Err(Error::shape_mismatch("network input", &expected, patch.shape()));
        }
        Ok(())
    }

    fn activation(&self) -> Activation {
        self.config.activation
    }

    /// Class probabilities for one patch. In training mode dropout masks are
    /// drawn from `rng` and all per-layer caches are returned for a backward
    /// pass; in inference mode dropout is the identity and no caches are kept.
    pub fn forward(
        &self,
        patch: &Tensor<T>,
        training: bool,
        rng: &mut Rng,
    ) -> Result<(Tensor<T>, Option<ForwardCaches<T>>)> {
        self.check_input(patch)?;
        if !training {
            return Ok((softmax(&self.infer_logits(patch)?), None));
        }

        let act = self.activation();
        let mut conv_inputs = Vec::with_capacity(self.convs.len());
        let mut conv_preact = Vec::with_capacity(self.convs.len());
        let mut x = patch.clone();
        for conv in &self.convs {
            let pre = conv.forward(&x)?;
            conv_inputs.push(x);
            x = act.forward(&pre);
            conv_preact.push(pre);
        }

        let (pooled, pool_cache) = self.pool.forward(&x)?;
        let flat_len = pooled.len();
        let mut x = pooled.reshape(&[flat_len])?;

        let hidden = self.fcs.len() - 1;
        let mut fc_inputs = Vec::with_capacity(self.fcs.len());
        let mut fc_preact = Vec::with_capacity(hidden);
        let mut dropout_masks = Vec::with_capacity(hidden);
        for (i, fc) in self.fcs.iter().enumerate() {
            let pre = fc.forward(&x)?;
            fc_inputs.push(x);
            if i < hidden {
                let activated = act.forward(&pre);
                fc_preact.push(pre);
                let (dropped, mask) = self.dropout.forward(&activated, true, rng);
                dropout_masks.push(mask.expect("training mode always yields a mask"));
                x = dropped;
            } else {
                x = pre;
            }
        }

        let logits = x;
        let probs = softmax(&logits);
        Ok((
            probs,
            Some(ForwardCaches {
                conv_inputs,
                conv_preact,
                pool_cache,
                fc_inputs,
                fc_preact,
                dropout_masks,
                logits,
            }),
        ))
    }

    /// Inference-mode class probabilities.
    pub fn infer(&self, patch: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(patch)?;
        Ok(softmax(&self.infer_logits(patch)?))
    }

    fn infer_logits(&self, patch: &Tensor<T>) -> Result<Tensor<T>> {
        let act = self.activation();
        let mut x = self.convs[0].forward(patch)?;
        x = act.forward(&x);
        for conv in &self.convs[1..] {
            let pre = conv.forward(&x)?;
            x = act.forward(&pre);
        }
        let (pooled, _) = self.pool.forward(&x)?;
        let flat_len = pooled.len();
        let mut x = pooled.reshape(&[flat_len])?;
        let hidden = self.fcs.len() - 1;
        for (i, fc) in self.fcs.iter().enumerate() {
            let pre = fc.forward(&x)?;
            x = if i < hidden { act.forward(&pre) } else { pre };
        }
        Ok(x)
    }

    /// Loss and gradient accumulation for one sample. The caller owns the
    /// accumulation buffer so mini-batch workers can sum locally.
    pub fn backward_into(
        &self,
        caches: &ForwardCaches<T>,
        label: usize,
        grads: &mut Gradients<T>,
    ) -> Result<T> {
        let sce = softmax_cross_entropy(&caches.logits, label)?;
        let act = self.activation();
        let hidden = self.fcs.len() - 1;
        let conv_slots = 2 * self.convs.len();

        let mut g = sce.grad_logits;
        for i in (0..self.fcs.len()).rev() {
            if i < hidden {
                g = self.dropout.backward(&caches.dropout_masks[i], &g)?;
                g = act.backward(&caches.fc_preact[i], &g)?;
            }
            let fg = self.fcs[i].backward(&caches.fc_inputs[i], &g)?;
            grads.accumulate(conv_slots + 2 * i, &fg.weights);
            grads.accumulate(conv_slots + 2 * i + 1, &fg.bias);
            g = fg.input;
        }

        let (pool_h, pool_w) = self.chain.pool_out;
        let channels = self.config.filters_per_conv[self.convs.len() - 1];
        let mut g = g.reshape(&[channels, pool_h, pool_w])?;
        g = self.pool.backward(&caches.pool_cache, &g)?;

        for i in (0..self.convs.len()).rev() {
            g = act.backward(&caches.conv_preact[i], &g)?;
            let cg = self.convs[i].backward(&caches.conv_inputs[i], &g)?;
            grads.accumulate(2 * i, &cg.kernels);
            grads.accumulate(2 * i + 1, &cg.bias);
            g = cg.input;
        }

        Ok(sce.loss)
    }

    /// Momentum SGD update: `v = momentum * v + g`, `p -= lr * v`.
    /// With momentum 0 this is exactly vanilla SGD.
    pub fn sgd_step(&mut self, grads: &Gradients<T>, velocity: &mut Gradients<T>, lr: f64, momentum: f64) {
        let lr = T::from_f64(lr);
        let momentum = T::from_f64(momentum);
        let params: Vec<&mut Tensor<T>> = {
            let mut out: Vec<&mut Tensor<T>> = Vec::new();
            for conv in &mut self.convs {
                out.push(&mut conv.kernels);
                out.push(&mut conv.bias);
            }
            for fc in &mut self.fcs {
                out.push(&mut fc.weights);
                out.push(&mut fc.bias);
            }
            out
        };
        debug_assert_eq!(params.len(), grads.tensors.len());
        for ((param, grad), vel) in params
            .into_iter()
            .zip(&grads.tensors)
            .zip(&mut velocity.tensors)
        {
            for ((p, &g), v) in param
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(vel.data_mut())
            {
                *v = momentum * *v + g;
                *p -= lr * *v;
            }
        }
    }

    /// Element-wise conversion between precisions (used by gradient checks).
    pub fn cast<U: Scalar>(&self) -> Result<Network<U>> {
        let tensors = self.param_tensors().iter().map(|t| t.cast::<U>()).collect();
        Network::<U>::from_parts(&self.config, tensors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_network_has_expected_geometry() {
        let cfg = ArchitectureConfig::canonical(3);
        let mut rng = Rng::new(1);
        let net: Network<f32> = build_network(&cfg, &mut rng).unwrap();
        assert_eq!(net.shape_chain().flatten, 1024);
        // Hand-computed parameter count for the canonical 3-class network:
        //   conv1 32*3*3*3+32 = 896, conv2 64*32*3*3+64 = 18_496,
        //   fc1 256*1024+256 = 262_400, fc2 512*256+512 = 131_584,
        //   fc3 3*512+3 = 1_539.
        assert_eq!(net.num_parameters(), 896 + 18_496 + 262_400 + 131_584 + 1_539);
        let specs = Network::<f32>::param_specs(&cfg).unwrap();
        assert_eq!(specs[2].name, "conv2.kernels");
        assert_eq!(specs[4].shape, vec![256, 1024]);
        assert_eq!(specs.last().unwrap().shape, vec![3]);
    }

    #[test]
    fn five_class_network_has_five_outputs() {
        let cfg = ArchitectureConfig::canonical(5);
        let mut rng = Rng::new(1);
        let net: Network<f32> = build_network(&cfg, &mut rng).unwrap();
        let patch = Tensor::zeros(&[3, 32, 32]).unwrap();
        let probs = net.infer(&patch).unwrap();
        assert_eq!(probs.shape(), &[5]);
    }

    #[test]
    fn depth_one_variant_builds_and_runs() {
        let cfg = ArchitectureConfig::canonical_with_depth(3, 1).unwrap();
        let mut rng = Rng::new(2);
        let net: Network<f32> = build_network(&cfg, &mut rng).unwrap();
        let mut rng2 = Rng::new(3);
        let patch = Tensor::<f32>::uniform(&mut rng2, &[3, 32, 32], 0.0, 1.0).unwrap();
        let probs = net.infer(&patch).unwrap();
        let sum: f32 = probs.data().iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let cfg = ArchitectureConfig::canonical(3);
        let mut rng = Rng::new(5);
        let net: Network<f32> = build_network(&cfg, &mut rng).unwrap();
        let patch = Tensor::<f32>::uniform(&mut rng, &[3, 32, 32], 0.0, 1.0).unwrap();
        let (probs, caches) = net.forward(&patch, false, &mut rng).unwrap();
        assert!(caches.is_none());
        let sum: f32 = probs.data().iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
    }

    #[test]
    fn inference_is_deterministic() {
        let cfg = ArchitectureConfig::canonical(3);
        let mut rng = Rng::new(6);
        let net: Network<f32> = build_network(&cfg, &mut rng).unwrap();
        let patch = Tensor::<f32>::uniform(&mut rng, &[3, 32, 32], 0.0, 1.0).unwrap();
        let a = net.infer(&patch).unwrap();
        let b = net.infer(&patch).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn zero_patch_on_fresh_network_gives_uniform_probs() {
        let cfg = ArchitectureConfig::canonical(3);
        let mut rng = Rng::new(7);
        let net: Network<f32> = build_network(&cfg, &mut rng).unwrap();
        let probs = net.infer(&Tensor::zeros(&[3, 32, 32]).unwrap()).unwrap();
        for &p in probs.data() {
            assert!((p - 1.0 / 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn seeded_builds_are_identical() {
        let cfg = ArchitectureConfig::canonical(3);
        let a: Network<f32> = build_network(&cfg, &mut Rng::new(11)).unwrap();
        let b: Network<f32> = build_network(&cfg, &mut Rng::new(11)).unwrap();
        for (ta, tb) in a.param_tensors().iter().zip(b.param_tensors()) {
            assert_eq!(ta.data(), tb.data());
        }
    }

    #[test]
    fn wrong_input_shape_is_rejected() {
        let cfg = ArchitectureConfig::canonical(3);
        let net: Network<f32> = build_network(&cfg, &mut Rng::new(1)).unwrap();
        let err = net.infer(&Tensor::zeros(&[1, 32, 32]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }));
    }

    #[test]
    fn training_forward_backward_produces_finite_gradients() {
        let cfg = ArchitectureConfig::canonical(3);
        let mut rng = Rng::new(13);
        let net: Network<f32> = build_network(&cfg, &mut rng).unwrap();
        let patch = Tensor::<f32>::uniform(&mut rng, &[3, 32, 32], 0.0, 1.0).unwrap();
        let (_, caches) = net.forward(&patch, true, &mut rng).unwrap();
        let mut grads = Gradients::zeros_for(&cfg).unwrap();
        let loss = net.backward_into(&caches.unwrap(), 1, &mut grads).unwrap();
        assert!(loss.is_finite());
        assert!(grads
            .tensors()
            .iter()
            .all(|t| t.data().iter().all(|v| v.is_finite())));
        // At least the fc3 weight gradient must be nonzero.
        assert!(grads.tensors()[8].data().iter().any(|&v| v != 0.0));
    }
}
