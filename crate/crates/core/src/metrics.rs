//! Classification and neuron-activity metrics.

use alloc::vec;
use alloc::vec::Vec;

use crate::activation::Mode;
use crate::dataset::{sequential_batches, IdxDataset};
use crate::error::{Error, Result};
use crate::layers::softmax_cross_entropy;
use crate::model::{ForwardPass, Model};
use crate::rng::RngState;
use crate::tensor::Tensor;

/// A unit counts as dead when its mean absolute activation is below this.
pub const DEAD_THRESHOLD: f64 = 1e-5;

/// Index of the largest entry in each row; ties resolve to the lowest index.
pub fn argmax_rows(logits: &Tensor) -> Result<Vec<usize>> {
    if logits.rank() != 2 {
        return Err(Error::InvalidShape {
            shape: logits.shape().to_vec(),
            reason: "argmax expects [batch, classes]",
        });
    }
    let classes = logits.shape()[1];
    Ok(logits
        .data()
        .chunks_exact(classes)
        .map(|row| {
            row.iter()
                .enumerate()
                .fold(0, |best, (i, &v)| if v > row[best] { i } else { best })
        })
        .collect())
}

pub fn correct_count(logits: &Tensor, labels: &[usize]) -> Result<usize> {
    let pred = argmax_rows(logits)?;
    if pred.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            op: "accuracy",
            lhs: logits.shape().to_vec(),
            rhs: vec![labels.len()],
        });
    }
    Ok(pred.iter().zip(labels).filter(|(p, l)| p == l).count())
}

/// Fraction of rows whose argmax equals the label.
pub fn accuracy(logits: &Tensor, labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Empty("labels"));
    }
    Ok(correct_count(logits, labels)? as f64 / labels.len() as f64)
}

/// Running per-unit mean of `|activation|` for every activation site.
///
/// A unit is one feature of a `[batch, units]` output or one channel of a
/// `[batch, channels, h, w]` output (averaged over positions too).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeadNeuronTracker {
    sums: Vec<Vec<f64>>,
    counts: Vec<u64>,
}

impl DeadNeuronTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, site: usize, output: &Tensor) -> Result<()> {
        let shape = output.shape();
        let (units, per_unit) = match shape.len() {
            2 => (shape[1], 1),
            4 => (shape[1], shape[2] * shape[3]),
            _ => {
                return Err(Error::InvalidShape {
                    shape: shape.to_vec(),
                    reason: "activation output must be rank 2 or 4",
                })
            }
        };
        while self.sums.len() <= site {
            self.sums.push(Vec::new());
            self.counts.push(0);
        }
        let sums = &mut self.sums[site];
        if sums.is_empty() {
            *sums = vec![0.0; units];
        } else if sums.len() != units {
            return Err(Error::ShapeMismatch {
                op: "DeadNeuronTracker::observe",
                lhs: shape.to_vec(),
                rhs: vec![sums.len()],
            });
        }
        for sample in output.data().chunks_exact(units * per_unit) {
            for (u, block) in sample.chunks_exact(per_unit).enumerate() {
                sums[u] += block.iter().map(|v| v.abs()).sum::<f64>();
            }
        }
        self.counts[site] += (shape[0] * per_unit) as u64;
        Ok(())
    }

    pub fn observe_pass(&mut self, pass: &ForwardPass) -> Result<()> {
        for (site, rec) in pass.sites().enumerate() {
            self.observe(site, &rec.output)?;
        }
        Ok(())
    }

    /// Mean `|activation|` per unit, per site.
    pub fn unit_means(&self) -> Vec<Vec<f64>> {
        self.sums
            .iter()
            .zip(&self.counts)
            .map(|(s, &c)| s.iter().map(|v| v / c.max(1) as f64).collect())
            .collect()
    }

    pub fn dead_units(&self, threshold: f64) -> usize {
        self.unit_means().iter().flatten().filter(|&&m| m < threshold).count()
    }

    pub fn total_units(&self) -> usize {
        self.sums.iter().map(Vec::len).sum()
    }

    /// Dead fraction over all sites.
    pub fn ratio(&self, threshold: f64) -> Result<f64> {
        let total = self.total_units();
        if total == 0 || self.counts.iter().all(|&c| c == 0) {
            return Err(Error::Empty("dead-neuron statistics"));
        }
        Ok(self.dead_units(threshold) as f64 / total as f64)
    }

    /// Dead fraction of a single site.
    pub fn site_ratio(&self, site: usize, threshold: f64) -> Result<f64> {
        let means = self.unit_means();
        let m = means
            .get(site)
            .filter(|m| !m.is_empty())
            .ok_or(Error::Empty("site statistics"))?;
        Ok(m.iter().filter(|&&v| v < threshold).count() as f64 / m.len() as f64)
    }
}

/// Counts of strictly positive pre-activations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PositiveFraction {
    pub positive: u64,
    pub total: u64,
}

impl PositiveFraction {
    pub fn observe(&mut self, pre_activation: &Tensor) {
        self.positive += pre_activation.data().iter().filter(|&&v| v > 0.0).count() as u64;
        self.total += pre_activation.len() as u64;
    }

    pub fn observe_pass(&mut self, pass: &ForwardPass) {
        for rec in pass.sites() {
            self.observe(rec.pre_activation());
        }
    }

    pub fn non_positive(&self) -> u64 {
        self.total - self.positive
    }

    pub fn p_positive(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.positive as f64 / self.total as f64
        }
    }
}

/// Aggregate statistics of one pass over a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub loss: f64,
    pub accuracy: f64,
    pub correct: usize,
    pub samples: usize,
    pub dead_ratio: f64,
    pub p_positive: f64,
}

/// Full pass over `data` in index order.
pub fn evaluate(
    model: &Model,
    data: &IdxDataset,
    batch_size: usize,
    mode: Mode,
    rng: &mut RngState,
    dead_threshold: f64,
) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let mut loss_sum = 0.0;
    let mut correct = 0;
    let mut tracker = DeadNeuronTracker::new();
    let mut positive = PositiveFraction::default();
    for idx in sequential_batches(data.len(), batch_size)? {
        let (x, labels) = data.batch(&idx, model.arch())?;
        let pass = model.forward(&x, mode, rng)?;
        let (loss, _) = softmax_cross_entropy(&pass.logits, &labels)?;
        loss_sum += loss * labels.len() as f64;
        correct += correct_count(&pass.logits, &labels)?;
        tracker.observe_pass(&pass)?;
        positive.observe_pass(&pass);
    }
    let n = data.len();
    Ok(EvalReport {
        loss: loss_sum / n as f64,
        accuracy: correct as f64 / n as f64,
        correct,
        samples: n,
        dead_ratio: tracker.ratio(dead_threshold)?,
        p_positive: positive.p_positive(),
    })
}

/// Fraction of hidden units whose mean `|activation|` over `data` is below
/// `threshold`. Eval mode is the standard measurement; Train mode is
/// accepted for diagnostics of the stochastic activations.
pub fn dead_neuron_ratio(
    model: &Model,
    data: &IdxDataset,
    batch_size: usize,
    mode: Mode,
    rng: &mut RngState,
    threshold: f64,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let mut tracker = DeadNeuronTracker::new();
    for idx in sequential_batches(data.len(), batch_size)? {
        let (x, _) = data.batch(&idx, model.arch())?;
        tracker.observe_pass(&model.forward(&x, mode, rng)?)?;
    }
    tracker.ratio(threshold)
}
