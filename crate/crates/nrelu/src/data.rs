//! Locating and loading the four MNIST IDX files.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use nrelu_core::idx::{parse_idx_images, parse_idx_labels};
use nrelu_core::{IdxDataset, Split};

use crate::error::{io_err, Error, Result};

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

pub const DATA_DIR_ENV: &str = "NRELU_DATA_DIR";
pub const DEFAULT_DATA_DIR: &str = "data";

/// `flag`, else `$NRELU_DATA_DIR`, else `./data`.
pub fn resolve_data_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_DIR))
}

pub fn file_names(split: Split) -> (&'static str, &'static str) {
    match split {
        Split::Train => (TRAIN_IMAGES, TRAIN_LABELS),
        Split::Val => (TEST_IMAGES, TEST_LABELS),
    }
}

/// Reads `path`, inflating it when the name ends in `.gz`.
pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(io_err(path))?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(io_err(path))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// `dir/name`, or `dir/name.gz` when only the compressed file exists.
pub fn locate(dir: &Path, name: &'static str) -> Result<PathBuf> {
    let plain = dir.join(name);
    if plain.is_file() {
        return Ok(plain);
    }
    let gz = dir.join(format!("{name}.gz"));
    if gz.is_file() {
        return Ok(gz);
    }
    Err(Error::MissingData {
        dir: dir.to_path_buf(),
        name,
    })
}

/// Loads a split from `dir`. Files of any size are accepted; use
/// [`IdxDataset::is_canonical`] or [`load_canonical`] to insist on the
/// official sample counts.
pub fn load_split(dir: &Path, split: Split) -> Result<IdxDataset> {
    let (img_name, lbl_name) = file_names(split);
    let img_path = locate(dir, img_name)?;
    let lbl_path = locate(dir, lbl_name)?;
    let images = parse_idx_images(&read_file(&img_path)?).map_err(|source| Error::Parse {
        path: img_path.clone(),
        source,
    })?;
    let labels = parse_idx_labels(&read_file(&lbl_path)?).map_err(|source| Error::Parse {
        path: lbl_path.clone(),
        source,
    })?;
    IdxDataset::from_idx(&images, labels, split).map_err(|source| Error::Parse { path: img_path, source })
}

/// Like [`load_split`] but fails unless the split has its official size.
pub fn load_canonical(dir: &Path, split: Split) -> Result<IdxDataset> {
    let data = load_split(dir, split)?;
    if !data.is_canonical() {
        return Err(Error::SampleCount {
            file: file_names(split).0,
            expected: split.canonical_len(),
            found: data.len(),
        });
    }
    Ok(data)
}
