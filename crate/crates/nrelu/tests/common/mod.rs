#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use nrelu::config::ExperimentConfig;
use nrelu::data::{TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS};
use nrelu::experiment::Datasets;
use nrelu_core::idx::{encode_idx_images, encode_idx_labels, IdxImages};
use tempfile::TempDir;

/// Separable digits: class `k` lights up rows `2k+4..2k+6` over a noisy
/// background.
pub fn synthetic(count: usize, salt: u64) -> (IdxImages, Vec<u8>) {
    let mut state = salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let mut pixels = Vec::with_capacity(count * 784);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let k = (next() % 10) as usize;
        labels.push(k as u8);
        for r in 0..28 {
            for _ in 0..28 {
                let noise = (next() % 48) as u8;
                let lit = (2 * k + 4..2 * k + 6).contains(&r);
                pixels.push(if lit { 200 + noise } else { noise });
            }
        }
    }
    let images = IdxImages {
        count,
        rows: 28,
        cols: 28,
        pixels,
    };
    (images, labels)
}

pub fn write_split(dir: &Path, images_name: &str, labels_name: &str, count: usize, salt: u64) {
    let (images, labels) = synthetic(count, salt);
    fs::write(dir.join(images_name), encode_idx_images(&images)).unwrap();
    fs::write(dir.join(labels_name), encode_idx_labels(&labels)).unwrap();
}

/// A data directory with 500 training and 200 validation samples.
pub struct Fixture {
    pub root: TempDir,
    pub data_dir: PathBuf,
}

impl Fixture {
    pub fn new() -> Self {
        let root = tempfile::tempdir().unwrap();
        let data_dir = root.path().join("data");
        fs::create_dir(&data_dir).unwrap();
        write_split(&data_dir, TRAIN_IMAGES, TRAIN_LABELS, 500, 1);
        write_split(&data_dir, TEST_IMAGES, TEST_LABELS, 200, 2);
        Self { root, data_dir }
    }

    pub fn datasets(&self) -> Datasets {
        Datasets::load(&self.data_dir).unwrap()
    }

    pub fn out_dir(&self, name: &str) -> PathBuf {
        self.root.path().join(name)
    }

    /// Defaults pointed at the fixture, with a short schedule.
    pub fn config(&self, out: &str, epochs: u32) -> ExperimentConfig {
        ExperimentConfig {
            epochs,
            data_dir: self.data_dir.clone(),
            out_dir: self.out_dir(out),
            ..ExperimentConfig::default()
        }
    }
}
