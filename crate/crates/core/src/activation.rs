//! Rectifier family with forward and backward passes.
//!
//! Every activation selects the linear branch with the strict test `x > 0`;
//! an input of exactly zero takes the negative branch. The stochastic
//! activations (RReLU, N-ReLU) draw fresh randomness on every Train-mode
//! forward call and record what they drew in an [`ActivationCache`], so the
//! backward pass sees the same realisation. In Eval mode both become
//! deterministic: N-ReLU replaces its noise by its mean (zero, i.e. plain
//! ReLU) and RReLU uses the midpoint slope.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};
use core::fmt;
use core::str::FromStr;

use crate::error::{param, Error, Result};
use crate::rng::RngState;
use crate::tensor::{sample_uniform, Tensor};

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;
pub const DEFAULT_PRELU_ALPHA: f64 = 0.25;
pub const DEFAULT_RRELU_LO: f64 = 1.0 / 8.0;
pub const DEFAULT_RRELU_HI: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Relu,
    LeakyRelu,
    Prelu,
    Gelu,
    Rrelu,
    Nrelu,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 6] = [
        ActivationKind::Relu,
        ActivationKind::LeakyRelu,
        ActivationKind::Prelu,
        ActivationKind::Gelu,
        ActivationKind::Rrelu,
        ActivationKind::Nrelu,
    ];

    /// Lower-case identifier used in file names and on the command line.
    pub fn id(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::LeakyRelu => "leakyrelu",
            ActivationKind::Prelu => "prelu",
            ActivationKind::Gelu => "gelu",
            ActivationKind::Rrelu => "rrelu",
            ActivationKind::Nrelu => "nrelu",
        }
    }

    /// Display name as printed in result tables.
    pub fn label(self) -> &'static str {
        match self {
            ActivationKind::Relu => "ReLU",
            ActivationKind::LeakyRelu => "LeakyReLU",
            ActivationKind::Prelu => "PReLU",
            ActivationKind::Gelu => "GELU",
            ActivationKind::Rrelu => "RReLU",
            ActivationKind::Nrelu => "N-ReLU",
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: alloc::string::String = s
            .chars()
            .filter(|c| *c != '-' && *c != '_')
            .flat_map(char::to_lowercase)
            .collect();
        ActivationKind::ALL
            .into_iter()
            .find(|k| k.id() == norm)
            .ok_or_else(|| param("activation", alloc::format!("unknown activation `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Train,
    Eval,
}

/// Activation family plus every parameter any family needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationSpec {
    pub kind: ActivationKind,
    /// Noise standard deviation (N-ReLU).
    pub sigma: f64,
    pub leaky_slope: f64,
    /// Initial value of the learnable PReLU slope.
    pub alpha_init: f64,
    pub rrelu_lo: f64,
    pub rrelu_hi: f64,
    pub mode: Mode,
}

impl ActivationSpec {
    pub fn new(kind: ActivationKind) -> Self {
        Self {
            kind,
            sigma: 0.0,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            alpha_init: DEFAULT_PRELU_ALPHA,
            rrelu_lo: DEFAULT_RRELU_LO,
            rrelu_hi: DEFAULT_RRELU_HI,
            mode: Mode::Train,
        }
    }

    pub fn relu() -> Self {
        Self::new(ActivationKind::Relu)
    }

    pub fn leaky_relu(slope: f64) -> Self {
        Self {
            leaky_slope: slope,
            ..Self::new(ActivationKind::LeakyRelu)
        }
    }

    pub fn prelu(alpha_init: f64) -> Self {
        Self {
            alpha_init,
            ..Self::new(ActivationKind::Prelu)
        }
    }

    pub fn gelu() -> Self {
        Self::new(ActivationKind::Gelu)
    }

    pub fn rrelu(lo: f64, hi: f64) -> Self {
        Self {
            rrelu_lo: lo,
            rrelu_hi: hi,
            ..Self::new(ActivationKind::Rrelu)
        }
    }

    pub fn nrelu(sigma: f64) -> Self {
        Self {
            sigma,
            ..Self::new(ActivationKind::Nrelu)
        }
    }

    pub fn with_mode(self, mode: Mode) -> Self {
        Self { mode, ..self }
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(param("sigma", "must be finite and non-negative"));
        }
        if !self.leaky_slope.is_finite() || !self.alpha_init.is_finite() {
            return Err(param("slope", "must be finite"));
        }
        if !self.rrelu_lo.is_finite() || !self.rrelu_hi.is_finite() || self.rrelu_lo > self.rrelu_hi {
            return Err(param("rrelu_lo/rrelu_hi", "need finite lo <= hi"));
        }
        Ok(())
    }

    /// Whether a forward pass with this spec consumes randomness.
    pub fn is_stochastic(&self) -> bool {
        self.mode == Mode::Train
            && match self.kind {
                ActivationKind::Nrelu => self.sigma > 0.0,
                ActivationKind::Rrelu => self.rrelu_lo < self.rrelu_hi,
                _ => false,
            }
    }
}

/// State recorded by a forward pass for use by the matching backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationCache {
    pub input: Tensor,
    /// Noise drawn for the non-positive entries (N-ReLU, Train mode).
    pub noise: Option<Tensor>,
    /// Per-element negative slopes (RReLU, Train mode).
    pub slopes: Option<Tensor>,
    /// PReLU slope used in the forward pass.
    pub alpha: Option<f64>,
}

impl ActivationCache {
    fn plain(input: &Tensor) -> Self {
        Self {
            input: input.clone(),
            noise: None,
            slopes: None,
            alpha: None,
        }
    }
}

fn map(x: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::from_parts(x.shape().to_vec(), x.data().iter().map(|&v| f(v)).collect())
}

fn check_same(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            op,
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    Ok(())
}

/// `grad_out ⊙ g(x)` where `g` is the local derivative.
fn chain(op: &'static str, grad_out: &Tensor, x: &Tensor, g: impl Fn(usize, f64) -> f64) -> Result<Tensor> {
    check_same(op, grad_out, x)?;
    let data: Vec<f64> = grad_out
        .data()
        .iter()
        .zip(x.data())
        .enumerate()
        .map(|(i, (&go, &xi))| go * g(i, xi))
        .collect();
    crate::tensor::ensure_finite(&data, op)?;
    Ok(Tensor::from_parts(x.shape().to_vec(), data))
}

pub fn relu_forward(x: &Tensor) -> Tensor {
    map(x, |v| if v > 0.0 { v } else { 0.0 })
}

pub fn relu_backward(grad_out: &Tensor, x: &Tensor) -> Result<Tensor> {
    chain("relu_backward", grad_out, x, |_, v| if v > 0.0 { 1.0 } else { 0.0 })
}

/// N-ReLU with a caller-supplied noise tensor: `x` where `x > 0`, else the
/// matching noise entry.
pub fn nrelu_apply(x: &Tensor, noise: &Tensor) -> Result<Tensor> {
    check_same("nrelu_apply", x, noise)?;
    Ok(Tensor::from_parts(
        x.shape().to_vec(),
        x.data()
            .iter()
            .zip(noise.data())
            .map(|(&v, &e)| if v > 0.0 { v } else { e })
            .collect(),
    ))
}

/// N-ReLU forward. In Train mode every non-positive input is replaced by an
/// independent draw `ε ~ N(0, σ²)`; in Eval mode the output is `max(0, x)`.
pub fn nrelu_forward(x: &Tensor, spec: &ActivationSpec, rng: &mut RngState) -> Result<(Tensor, ActivationCache)> {
    spec.validate()?;
    let mut cache = ActivationCache::plain(x);
    match spec.mode {
        Mode::Eval => Ok((relu_forward(x), cache)),
        Mode::Train => {
            // draws happen only where the noise branch is taken; the other
            // entries of the recorded noise are zero
            let noise = if spec.sigma == 0.0 {
                Tensor::zeros_like(x)
            } else {
                let data = x
                    .data()
                    .iter()
                    .map(|&v| if v > 0.0 { 0.0 } else { rng.normal(0.0, spec.sigma) })
                    .collect();
                Tensor::from_parts(x.shape().to_vec(), data)
            };
            let out = nrelu_apply(x, &noise)?;
            cache.noise = Some(noise);
            Ok((out, cache))
        }
    }
}

/// Gradient of the selected branch: the noise does not depend on `x`, so the
/// non-positive entries pass no gradient.
pub fn nrelu_backward(grad_out: &Tensor, cache: &ActivationCache) -> Result<Tensor> {
    relu_backward(grad_out, &cache.input)
}

pub fn leaky_relu_forward(x: &Tensor, slope: f64) -> Tensor {
    map(x, |v| if v > 0.0 { v } else { slope * v })
}

pub fn leaky_relu_backward(grad_out: &Tensor, x: &Tensor, slope: f64) -> Result<Tensor> {
    chain(
        "leaky_relu_backward",
        grad_out,
        x,
        |_, v| if v > 0.0 { 1.0 } else { slope },
    )
}

pub fn prelu_forward(x: &Tensor, alpha: f64) -> Tensor {
    leaky_relu_forward(x, alpha)
}

/// Returns `(grad_x, grad_alpha)`.
pub fn prelu_backward(grad_out: &Tensor, x: &Tensor, alpha: f64) -> Result<(Tensor, f64)> {
    let grad_x = leaky_relu_backward(grad_out, x, alpha)?;
    let grad_alpha = grad_out
        .data()
        .iter()
        .zip(x.data())
        .filter(|(_, &v)| !(v > 0.0))
        .map(|(&g, &v)| g * v)
        .sum::<f64>();
    if !grad_alpha.is_finite() {
        return Err(Error::NonFinite { op: "prelu_backward" });
    }
    Ok((grad_x, grad_alpha))
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x * FRAC_1_SQRT_2))
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI)
}

pub fn gelu_forward(x: &Tensor) -> Tensor {
    map(x, |v| v * std_normal_cdf(v))
}

pub fn gelu_backward(grad_out: &Tensor, x: &Tensor) -> Result<Tensor> {
    chain("gelu_backward", grad_out, x, |_, v| {
        std_normal_cdf(v) + v * std_normal_pdf(v)
    })
}

/// RReLU with explicit per-element slopes.
pub fn rrelu_apply(x: &Tensor, slopes: &Tensor) -> Result<Tensor> {
    check_same("rrelu_apply", x, slopes)?;
    Ok(Tensor::from_parts(
        x.shape().to_vec(),
        x.data()
            .iter()
            .zip(slopes.data())
            .map(|(&v, &s)| if v > 0.0 { v } else { s * v })
            .collect(),
    ))
}

pub fn rrelu_eval_slope(spec: &ActivationSpec) -> f64 {
    0.5 * (spec.rrelu_lo + spec.rrelu_hi)
}

/// RReLU forward. Train mode samples a slope `s ~ U[lo, hi)` per element;
/// Eval mode uses `(lo + hi) / 2` everywhere.
pub fn rrelu_forward(x: &Tensor, spec: &ActivationSpec, rng: &mut RngState) -> Result<(Tensor, ActivationCache)> {
    spec.validate()?;
    let mut cache = ActivationCache::plain(x);
    match spec.mode {
        Mode::Eval => Ok((leaky_relu_forward(x, rrelu_eval_slope(spec)), cache)),
        Mode::Train => {
            let slopes = sample_uniform(rng, x.shape(), spec.rrelu_lo, spec.rrelu_hi)?;
            let out = rrelu_apply(x, &slopes)?;
            cache.slopes = Some(slopes);
            Ok((out, cache))
        }
    }
}

pub fn rrelu_backward(grad_out: &Tensor, cache: &ActivationCache, spec: &ActivationSpec) -> Result<Tensor> {
    match &cache.slopes {
        Some(slopes) => {
            check_same("rrelu_backward", slopes, &cache.input)?;
            let s = slopes.data();
            chain("rrelu_backward", grad_out, &cache.input, |i, v| {
                if v > 0.0 {
                    1.0
                } else {
                    s[i]
                }
            })
        }
        None => leaky_relu_backward(grad_out, &cache.input, rrelu_eval_slope(spec)),
    }
}

/// Forward pass of any activation. `alpha` is the current PReLU slope and is
/// ignored by the other kinds.
pub fn activation_forward(
    x: &Tensor,
    spec: &ActivationSpec,
    alpha: f64,
    rng: &mut RngState,
) -> Result<(Tensor, ActivationCache)> {
    spec.validate()?;
    match spec.kind {
        ActivationKind::Relu => Ok((relu_forward(x), ActivationCache::plain(x))),
        ActivationKind::LeakyRelu => Ok((leaky_relu_forward(x, spec.leaky_slope), ActivationCache::plain(x))),
        ActivationKind::Prelu => {
            let mut cache = ActivationCache::plain(x);
            cache.alpha = Some(alpha);
            Ok((prelu_forward(x, alpha), cache))
        }
        ActivationKind::Gelu => Ok((gelu_forward(x), ActivationCache::plain(x))),
        ActivationKind::Rrelu => rrelu_forward(x, spec, rng),
        ActivationKind::Nrelu => nrelu_forward(x, spec, rng),
    }
}

/// Backward pass of any activation. Returns the input gradient and, for
/// PReLU, the slope gradient.
pub fn activation_backward(
    grad_out: &Tensor,
    cache: &ActivationCache,
    spec: &ActivationSpec,
) -> Result<(Tensor, Option<f64>)> {
    let x = &cache.input;
    match spec.kind {
        ActivationKind::Relu => Ok((relu_backward(grad_out, x)?, None)),
        ActivationKind::LeakyRelu => Ok((leaky_relu_backward(grad_out, x, spec.leaky_slope)?, None)),
        ActivationKind::Prelu => {
            let alpha = cache.alpha.unwrap_or(spec.alpha_init);
            let (gx, ga) = prelu_backward(grad_out, x, alpha)?;
            Ok((gx, Some(ga)))
        }
        ActivationKind::Gelu => Ok((gelu_backward(grad_out, x)?, None)),
        ActivationKind::Rrelu => Ok((rrelu_backward(grad_out, cache, spec)?, None)),
        ActivationKind::Nrelu => Ok((nrelu_backward(grad_out, cache)?, None)),
    }
}
