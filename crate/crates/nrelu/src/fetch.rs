//! Download of the four gzip'd MNIST files.

use std::fs;
use std::path::{Path, PathBuf};

use nrelu_core::Split;

use crate::data::{load_canonical, TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS};
use crate::error::{io_err, Error, Result};

pub const MIRRORS: &[&str] = &[
    "https://storage.googleapis.com/cvdf-datasets/mnist/",
    "https://ossci-datasets.s3.amazonaws.com/mnist/",
];

/// Compressed sizes of the official archives, in bytes.
pub const FILES: [(&str, u64); 4] = [
    (TRAIN_IMAGES, 9_912_422),
    (TRAIN_LABELS, 28_881),
    (TEST_IMAGES, 1_648_877),
    (TEST_LABELS, 4_542),
];

const MAX_BODY: u64 = 32 * 1024 * 1024;

fn download(url: &str) -> Result<Vec<u8>> {
    let fail = |reason: String| Error::Download {
        url: url.to_string(),
        reason,
    };
    let mut resp = ureq::get(url).call().map_err(|e| fail(e.to_string()))?;
    resp.body_mut()
        .with_config()
        .limit(MAX_BODY)
        .read_to_vec()
        .map_err(|e| fail(e.to_string()))
}

/// Fetches one archive into `dir`, trying each mirror in turn and
/// rejecting bodies of the wrong size.
fn fetch_one(dir: &Path, name: &str, size: u64, log: &mut dyn FnMut(&str)) -> Result<PathBuf> {
    let target = dir.join(format!("{name}.gz"));
    let mut last = None;
    for base in MIRRORS {
        let url = format!("{base}{name}.gz");
        log(&format!("fetching {url}"));
        match download(&url) {
            Ok(body) if body.len() as u64 == size => {
                let tmp = target.with_extension("gz.part");
                fs::write(&tmp, &body).map_err(io_err(&tmp))?;
                fs::rename(&tmp, &target).map_err(io_err(&target))?;
                return Ok(target);
            }
            Ok(body) => {
                last = Some(Error::Download {
                    url,
                    reason: format!("expected {size} bytes, got {}", body.len()),
                })
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one mirror"))
}

/// Ensures both splits load from `dir` at their official sizes, downloading
/// whatever is missing.
pub fn fetch_data(dir: &Path, log: &mut dyn FnMut(&str)) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (name, size) in FILES {
        if dir.join(name).is_file() || dir.join(format!("{name}.gz")).is_file() {
            log(&format!("{name}: present"));
            continue;
        }
        fetch_one(dir, name, size, log)?;
    }
    for split in [Split::Train, Split::Val] {
        let d = load_canonical(dir, split)?;
        log(&format!("{split:?}: {} samples", d.len()));
    }
    Ok(())
}
