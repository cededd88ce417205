//! Mini-batch gradient computation and the training loop.
//!
//! Per-sample gradients fan out across workers in fixed-size chunks; each
//! chunk accumulates sequentially in sample order and chunks are reduced in
//! chunk order. The summation order is therefore independent of thread count,
//! and the parallel path is bitwise identical to the sequential one.

use crate::data::PatchDataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::model::{Gradients, Network};
use crate::rng::Rng;
use crate::tensor::{Scalar, Tensor};

/// One training sample: an input tensor, its class, and the seed of the
/// dropout stream its forward pass draws from.
pub struct GradSample<'a, T> {
    pub input: &'a Tensor<T>,
    pub label: usize,
    pub dropout_seed: u64,
}

/// Samples per reduction chunk.
const GRAD_CHUNK: usize = 8;

/// Per-epoch mean training loss.
#[derive(Clone, Debug, Default)]
pub struct TrainHistory {
    pub epoch_losses: Vec<f64>,
}

fn chunk_gradients<T: Scalar>(
    net: &Network<T>,
    chunk: &[GradSample<'_, T>],
) -> Result<(Gradients<T>, f64)> {
    let mut grads = Gradients::zeros_for(net.config())?;
    let mut loss_sum = 0.0f64;
    for sample in chunk {
        let mut rng = Rng::new(sample.dropout_seed);
        let (_, caches) = net.forward(sample.input, true, &mut rng)?;
        let caches = caches.expect("training forward always returns caches");
        loss_sum += net.backward_into(&caches, sample.label, &mut grads)?.to_f64();
    }
    Ok((grads, loss_sum))
}

fn reduce<T: Scalar>(
    net: &Network<T>,
    chunks: Vec<Result<(Gradients<T>, f64)>>,
) -> Result<(Gradients<T>, f64)> {
    let mut total = Gradients::zeros_for(net.config())?;
    let mut loss_sum = 0.0f64;
    for chunk in chunks {
        let (grads, loss) = chunk?;
        total.add_assign(&grads);
        loss_sum += loss;
    }
    Ok((total, loss_sum))
}

/// Summed (not averaged) gradients and loss over a mini-batch.
pub fn batch_gradients<'a, T: Scalar>(
    net: &Network<T>,
    samples: &[GradSample<'a, T>],
) -> Result<(Gradients<T>, f64)> {
    let chunks = exec::map_chunks(samples, GRAD_CHUNK, |chunk| chunk_gradients(net, chunk));
    reduce(net, chunks)
}

/// Sequential twin of [`batch_gradients`]; produces bitwise-identical results.
pub fn batch_gradients_seq<'a, T: Scalar>(
    net: &Network<T>,
    samples: &[GradSample<'a, T>],
) -> Result<(Gradients<T>, f64)> {
    let chunks = exec::map_chunks_seq(samples, GRAD_CHUNK, |chunk| chunk_gradients(net, chunk));
    reduce(net, chunks)
}

/// Trains `net` on `train` for `cfg.epochs` epochs of shuffled mini-batch
/// momentum SGD. Deterministic for a given starting network and rng.
pub fn train_fold(
    net: Network<f32>,
    train: &PatchDataset,
    cfg: &super::TrainConfig,
    rng: &mut Rng,
) -> Result<(Network<f32>, TrainHistory)> {
    cfg.validate()?;
    if train.patches.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    if net.num_classes() != train.num_classes {
        return Err(Error::Config(format!(
            "network has {} classes but the dataset has {}",
            net.num_classes(),
            train.num_classes
        )));
    }

    let mut net = net;
    let mut velocity = Gradients::zeros_for(net.config())?;
    let mut indices: Vec<usize> = (0..train.patches.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut indices);
        let lr = cfg.lr_for_epoch(epoch);
        let mut epoch_loss_sum = 0.0f64;

        for (batch_idx, batch) in indices.chunks(cfg.batch_size).enumerate() {
            let samples: Vec<GradSample<'_, f32>> = batch
                .iter()
                .map(|&i| {
                    let patch = &train.patches[i];
                    GradSample {
                        input: &patch.pixels,
                        label: patch.label,
                        dropout_seed: rng.next_u64(),
                    }
                })
                .collect();

            let (mut grads, loss_sum) = batch_gradients(&net, &samples)?;
            let batch_loss = loss_sum / samples.len() as f64;
            if !batch_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_idx,
                    loss: batch_loss,
                });
            }
            grads.scale(1.0 / samples.len() as f64);
            net.sgd_step(&grads, &mut velocity, lr, cfg.momentum);
            epoch_loss_sum += loss_sum;
        }

        let epoch_loss = epoch_loss_sum / indices.len() as f64;
        log::debug!("epoch {epoch}: mean loss {epoch_loss:.6}, lr {lr}");
        history.epoch_losses.push(epoch_loss);
    }

    Ok((net, history))
}
