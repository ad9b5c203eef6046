//! Numeric core for training small MNIST classifiers with stochastic
//! rectifiers.
//!
//! The crate is `no_std` (it needs `alloc`). It provides a dense `f64`
//! [`Tensor`], a seeded [`RngState`], the six rectifier-style activations
//! (ReLU, LeakyReLU, PReLU, GELU, RReLU and N-ReLU, which replaces
//! non-positive inputs by fresh `N(0, σ²)` noise), hand-written layer
//! gradients, Adam, the cosine σ schedule, an IDX codec and the metrics used
//! to judge a run. File access, logging and the command line live in the
//! `nrelu` crate.
//!
//! Randomness is always passed in explicitly; nothing here touches a global
//! generator.

#![cfg_attr(not(test), no_std)]
// Range checks are written `!(x >= 0.0)` so that NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod activation;
pub mod dataset;
pub mod error;
pub mod idx;
pub mod layers;
mod linalg;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod rng;
pub mod schedule;
pub mod tensor;
pub mod train;

pub use activation::{ActivationCache, ActivationKind, ActivationSpec, Mode};
pub use dataset::{IdxDataset, Split};
pub use error::{Error, ParseErrorKind, Result};
pub use model::{Arch, Model, ModelConfig};
pub use optim::Adam;
pub use rng::RngState;
pub use schedule::SigmaSchedule;
pub use tensor::{sample_gaussian, sample_uniform, Tensor};
