//! One epoch of mini-batch training, and the per-run random streams.

use alloc::format;

use crate::activation::Mode;
use crate::dataset::{shuffled_batches, IdxDataset};
use crate::error::{Error, Result};
use crate::layers::softmax_cross_entropy;
use crate::model::Model;
use crate::optim::Adam;
use crate::rng::{derive_seed, RngState};

const INIT_STREAM: u64 = 1;
const DATA_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

/// Independent random streams of one run.
///
/// Every stream is derived from the run seed alone, so two runs that differ
/// only in activation see identical weights at step 0 and identical batches,
/// and a run's output depends on its configuration and nothing else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunStreams {
    pub init_seed: u64,
    pub data: RngState,
    pub noise: RngState,
}

impl RunStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            init_seed: derive_seed(seed, INIT_STREAM),
            data: RngState::new(derive_seed(seed, DATA_STREAM)),
            noise: RngState::new(derive_seed(seed, NOISE_STREAM)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// Sample-weighted mean of the mini-batch losses.
    pub train_loss: f64,
    pub batches: usize,
}

/// Shuffles `data` with `data_rng`, then runs forward (Train mode), loss,
/// backward and one Adam step per mini-batch.
pub fn train_epoch(
    model: &mut Model,
    optimizer: &mut Adam,
    data: &IdxDataset,
    batch_size: usize,
    data_rng: &mut RngState,
    noise_rng: &mut RngState,
) -> Result<EpochStats> {
    let mut loss_sum = 0.0;
    let mut batches = 0;
    for idx in shuffled_batches(data.len(), data_rng, batch_size)? {
        let (x, labels) = data.batch(&idx, model.arch())?;
        let pass = model.forward(&x, Mode::Train, noise_rng)?;
        let (loss, grad) = softmax_cross_entropy(&pass.logits, &labels).map_err(|e| match e {
            Error::NonFinite { .. } => Error::Divergence(format!("non-finite loss at batch {batches}")),
            other => other,
        })?;
        let grads = model.backward(&pass, &grad)?;
        optimizer.step(&mut model.params_mut(), &grads.tensors)?;
        loss_sum += loss * labels.len() as f64;
        batches += 1;
    }
    Ok(EpochStats {
        train_loss: loss_sum / data.len() as f64,
        batches,
    })
}
