//! Data loading, run logs and the experiment runner on top of
//! [`nrelu_core`].
//!
//! The `nrelu` binary wraps [`experiment`] behind a command line; the same
//! functions are usable directly:
//!
//! ```no_run
//! use nrelu::config::ExperimentConfig;
//! use nrelu::experiment::{quiet, run_single, Datasets};
//! use nrelu_core::ActivationKind;
//!
//! let cfg = ExperimentConfig::default().with_activation(ActivationKind::Nrelu).with_sigma(0.05);
//! let data = Datasets::load(&cfg.data_dir)?;
//! let log = run_single(&cfg, &data, &mut quiet())?;
//! println!("{}", log.summary.final_val_acc);
//! # Ok::<(), nrelu::Error>(())
//! ```

pub mod checks;
pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod fetch;
pub mod runlog;
pub mod sys;

pub use error::{Error, Result};
pub use nrelu_core;
