//! In-memory labelled image sets and mini-batch iteration.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::idx::{normalize, IdxImages};
use crate::model::{Arch, NUM_CLASSES};
use crate::rng::RngState;
use crate::tensor::Tensor;

pub const DEFAULT_BATCH_SIZE: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    /// The 10k test images, used for validation.
    Val,
}

impl Split {
    /// Size of the canonical MNIST split.
    pub fn canonical_len(self) -> usize {
        match self {
            Split::Train => 60_000,
            Split::Val => 10_000,
        }
    }
}

/// Images in `[0, 1]` shaped `[n, 1, rows, cols]` with labels in `0..10`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxDataset {
    images: Tensor,
    labels: Vec<u8>,
    split: Split,
}

impl IdxDataset {
    pub fn from_idx(images: &IdxImages, labels: Vec<u8>, split: Split) -> Result<Self> {
        Self::new(normalize(images)?, labels, split)
    }

    pub fn new(images: Tensor, labels: Vec<u8>, split: Split) -> Result<Self> {
        if images.rank() != 4 || images.shape()[1] != 1 || images.shape()[0] != labels.len() {
            return Err(Error::ShapeMismatch {
                op: "IdxDataset::new",
                lhs: images.shape().to_vec(),
                rhs: alloc::vec![labels.len()],
            });
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l as usize >= NUM_CLASSES) {
            return Err(Error::LabelOutOfRange {
                index,
                label: label as usize,
                classes: NUM_CLASSES,
            });
        }
        if images.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(crate::error::param("images", "pixel values must lie in [0, 1]"));
        }
        Ok(Self { images, labels, split })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn split(&self) -> Split {
        self.split
    }

    /// True when the size matches the canonical split size.
    pub fn is_canonical(&self) -> bool {
        self.len() == self.split.canonical_len()
    }

    pub fn images(&self) -> &Tensor {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    fn image_len(&self) -> usize {
        self.images.len() / self.len()
    }

    /// The first `n` samples (all of them if `n >= len`).
    pub fn truncated(&self, n: usize) -> Result<Self> {
        let n = n.min(self.len());
        if n == 0 {
            return Err(Error::Empty("truncated dataset"));
        }
        let mut shape = self.images.shape().to_vec();
        shape[0] = n;
        let images = Tensor::new(&shape, self.images.data()[..n * self.image_len()].to_vec())?;
        Ok(Self {
            images,
            labels: self.labels[..n].to_vec(),
            split: self.split,
        })
    }

    /// Gathers `indices` into a batch shaped for `arch`, plus labels.
    pub fn batch(&self, indices: &[usize], arch: Arch) -> Result<(Tensor, Vec<usize>)> {
        let per = self.image_len();
        let mut data = Vec::with_capacity(indices.len() * per);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidShape {
                    shape: alloc::vec![i, self.len()],
                    reason: "sample index out of range",
                });
            }
            data.extend_from_slice(&self.images.data()[i * per..(i + 1) * per]);
            labels.push(self.labels[i] as usize);
        }
        let x = Tensor::new(&arch.input_shape(indices.len()), data)?;
        Ok((x, labels))
    }
}

/// A permutation of `0..n` consumed in chunks of `batch_size`; the last
/// chunk may be shorter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchIterator {
    permutation: Vec<usize>,
    batch_size: usize,
    cursor: usize,
}

impl BatchIterator {
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn batch_count(&self) -> usize {
        self.permutation.len().div_ceil(self.batch_size)
    }
}

impl Iterator for BatchIterator {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.cursor >= self.permutation.len() {
            return None;
        }
        let end = (self.cursor + self.batch_size).min(self.permutation.len());
        let batch = self.permutation[self.cursor..end].to_vec();
        self.cursor = end;
        Some(batch)
    }
}

fn check_batching(n: usize, batch_size: usize) -> Result<()> {
    if batch_size == 0 {
        return Err(crate::error::param("batch_size", "must be positive"));
    }
    if n == 0 {
        return Err(Error::Empty("dataset"));
    }
    Ok(())
}

/// One epoch over `0..n` in a Fisher–Yates order drawn from `rng`.
pub fn shuffled_batches(n: usize, rng: &mut RngState, batch_size: usize) -> Result<BatchIterator> {
    check_batching(n, batch_size)?;
    let mut permutation: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        permutation.swap(i, j);
    }
    Ok(BatchIterator {
        permutation,
        batch_size,
        cursor: 0,
    })
}

/// One epoch over `0..n` in index order.
pub fn sequential_batches(n: usize, batch_size: usize) -> Result<BatchIterator> {
    check_batching(n, batch_size)?;
    Ok(BatchIterator {
        permutation: (0..n).collect(),
        batch_size,
        cursor: 0,
    })
}
