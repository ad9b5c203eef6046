use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] nrelu_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: nrelu_core::Error },

    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },

    #[error(
        "MNIST file `{name}` not found in {} (also tried `{name}.gz`); run `nrelu fetch-data --data-dir {}` or set NRELU_DATA_DIR",
        dir.display(),
        dir.display()
    )]
    MissingData { dir: PathBuf, name: &'static str },

    #[error("{file} should hold {expected} samples, found {found}")]
    SampleCount {
        file: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("download of {url} failed: {reason}")]
    Download { url: String, reason: String },

    #[error("config {origin}: {reason}")]
    Config { origin: String, reason: String },

    #[error("run {run_id} diverged at epoch {epoch}: {source}")]
    Diverged {
        run_id: String,
        epoch: u32,
        source: nrelu_core::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
