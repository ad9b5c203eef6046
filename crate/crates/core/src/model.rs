//! The two evaluation architectures and their forward/backward passes.
//!
//! MLP: `784 → 256 → act → 128 → act → 10`.
//!
//! CNN: `conv(1→32, 3×3, pad 1) → act → pool 2 → conv(32→64, 3×3, pad 1) →
//! act → pool 2 → flatten (3136) → 128 → act → 10`.
//!
//! No activation follows the 10-unit output layer. When the activation is
//! PReLU every activation site owns one learnable slope.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::activation::{
    activation_backward, activation_forward, ActivationCache, ActivationKind, ActivationSpec, Mode,
};
use crate::error::{param, Error, Result};
use crate::layers::{maxpool2d_backward, maxpool2d_forward, Conv2d, Conv2dCache, Linear, MaxPoolCache};
use crate::rng::RngState;
use crate::tensor::Tensor;

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const NUM_CLASSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arch {
    Mlp,
    Cnn,
}

impl Arch {
    pub const ALL: [Arch; 2] = [Arch::Mlp, Arch::Cnn];

    pub fn id(self) -> &'static str {
        match self {
            Arch::Mlp => "mlp",
            Arch::Cnn => "cnn",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Arch::Mlp => "MLP",
            Arch::Cnn => "CNN",
        }
    }

    /// Input shape for a batch of `batch` images.
    pub fn input_shape(self, batch: usize) -> Vec<usize> {
        match self {
            Arch::Mlp => vec![batch, IMAGE_PIXELS],
            Arch::Cnn => vec![batch, 1, IMAGE_SIDE, IMAGE_SIDE],
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mlp" => Ok(Arch::Mlp),
            "cnn" => Ok(Arch::Cnn),
            _ => Err(param(
                "model",
                alloc::format!("unknown model `{s}` (expected mlp or cnn)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub arch: Arch,
    pub activation: ActivationSpec,
    pub init_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Conv(usize),
    Linear(usize),
    Act(usize),
    Pool,
    Flatten,
}

const MLP_OPS: &[Op] = &[Op::Linear(0), Op::Act(0), Op::Linear(1), Op::Act(1), Op::Linear(2)];

const CNN_OPS: &[Op] = &[
    Op::Conv(0),
    Op::Act(0),
    Op::Pool,
    Op::Conv(1),
    Op::Act(1),
    Op::Pool,
    Op::Flatten,
    Op::Linear(0),
    Op::Act(2),
    Op::Linear(1),
];

const POOL_WINDOW: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    arch: Arch,
    activation: ActivationSpec,
    convs: Vec<Conv2d>,
    linears: Vec<Linear>,
    /// One `[1]` slope per activation site, PReLU only.
    alphas: Vec<Tensor>,
}

/// Output of one activation site, kept for backward and for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteRecord {
    pub cache: ActivationCache,
    pub output: Tensor,
}

impl SiteRecord {
    pub fn pre_activation(&self) -> &Tensor {
        &self.cache.input
    }
}

#[derive(Debug, Clone, PartialEq)]
enum OpCache {
    Conv(Conv2dCache),
    Linear(Tensor),
    Act(SiteRecord),
    Pool(MaxPoolCache),
    Flatten(Vec<usize>),
}

/// Everything a forward pass recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub logits: Tensor,
    caches: Vec<OpCache>,
}

impl ForwardPass {
    /// Activation sites in network order.
    pub fn sites(&self) -> impl Iterator<Item = &SiteRecord> {
        self.caches.iter().filter_map(|c| match c {
            OpCache::Act(s) => Some(s),
            _ => None,
        })
    }
}

/// Parameter gradients, ordered like [`Model::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Tensor>,
}

impl Model {
    /// Kaiming-uniform weights and zero biases drawn from `init_seed`.
    pub fn new(config: &ModelConfig) -> Result<Self> {
        config.activation.validate()?;
        let mut rng = RngState::new(config.init_seed);
        let (convs, linears) = match config.arch {
            Arch::Mlp => (
                Vec::new(),
                vec![
                    Linear::kaiming_uniform(IMAGE_PIXELS, 256, &mut rng),
                    Linear::kaiming_uniform(256, 128, &mut rng),
                    Linear::kaiming_uniform(128, NUM_CLASSES, &mut rng),
                ],
            ),
            Arch::Cnn => (
                vec![
                    Conv2d::kaiming_uniform(1, 32, &mut rng),
                    Conv2d::kaiming_uniform(32, 64, &mut rng),
                ],
                vec![
                    Linear::kaiming_uniform(64 * 7 * 7, 128, &mut rng),
                    Linear::kaiming_uniform(128, NUM_CLASSES, &mut rng),
                ],
            ),
        };
        Ok(Self::assemble(config, convs, linears))
    }

    /// Same architecture with every parameter (including PReLU slopes) zero.
    pub fn zeroed(config: &ModelConfig) -> Result<Self> {
        config.activation.validate()?;
        let (convs, linears) = match config.arch {
            Arch::Mlp => (
                Vec::new(),
                vec![
                    Linear::zeros(IMAGE_PIXELS, 256),
                    Linear::zeros(256, 128),
                    Linear::zeros(128, NUM_CLASSES),
                ],
            ),
            Arch::Cnn => (
                vec![Conv2d::zeros(1, 32, 3, 1), Conv2d::zeros(32, 64, 3, 1)],
                vec![Linear::zeros(64 * 7 * 7, 128), Linear::zeros(128, NUM_CLASSES)],
            ),
        };
        let mut model = Self::assemble(config, convs, linears);
        model.alphas.iter_mut().for_each(|a| *a = Tensor::zeros(&[1]));
        Ok(model)
    }

    fn assemble(config: &ModelConfig, convs: Vec<Conv2d>, linears: Vec<Linear>) -> Self {
        let sites = Self::ops_for(config.arch)
            .iter()
            .filter(|op| matches!(op, Op::Act(_)))
            .count();
        let alphas = if config.activation.kind == ActivationKind::Prelu {
            vec![Tensor::full(&[1], config.activation.alpha_init); sites]
        } else {
            Vec::new()
        };
        Self {
            arch: config.arch,
            activation: config.activation,
            convs,
            linears,
            alphas,
        }
    }

    fn ops_for(arch: Arch) -> &'static [Op] {
        match arch {
            Arch::Mlp => MLP_OPS,
            Arch::Cnn => CNN_OPS,
        }
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn activation(&self) -> &ActivationSpec {
        &self.activation
    }

    /// Sets the N-ReLU noise level used by subsequent forward passes.
    pub fn set_sigma(&mut self, sigma: f64) -> Result<()> {
        let spec = self.activation.with_sigma(sigma);
        spec.validate()?;
        self.activation = spec;
        Ok(())
    }

    /// Zeroes the weights and bias of the 10-unit output layer.
    pub fn zero_output_layer(&mut self) {
        let head = self.linears.last_mut().expect("model has an output layer");
        *head = Linear::zeros(head.in_features(), head.out_features());
    }

    pub fn linears(&self) -> &[Linear] {
        &self.linears
    }

    pub fn linears_mut(&mut self) -> &mut [Linear] {
        &mut self.linears
    }

    pub fn convs(&self) -> &[Conv2d] {
        &self.convs
    }

    pub fn convs_mut(&mut self) -> &mut [Conv2d] {
        &mut self.convs
    }

    /// Current PReLU slopes, one per activation site (empty otherwise).
    pub fn prelu_alphas(&self) -> Vec<f64> {
        self.alphas.iter().map(|a| a.data()[0]).collect()
    }

    /// Number of activation sites.
    pub fn site_count(&self) -> usize {
        Self::ops_for(self.arch)
            .iter()
            .filter(|op| matches!(op, Op::Act(_)))
            .count()
    }

    /// Parameters in a fixed order: conv kernels/biases, linear
    /// weights/biases, then PReLU slopes.
    pub fn params(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for c in &self.convs {
            out.push(&c.kernels);
            out.push(&c.bias);
        }
        for l in &self.linears {
            out.push(&l.weight);
            out.push(&l.bias);
        }
        out.extend(self.alphas.iter());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for c in &mut self.convs {
            out.push(&mut c.kernels);
            out.push(&mut c.bias);
        }
        for l in &mut self.linears {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        out.extend(self.alphas.iter_mut());
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Runs the network. `mode` overrides the mode stored in the activation
    /// spec; `rng` feeds the stochastic activations in Train mode.
    pub fn forward(&self, x: &Tensor, mode: Mode, rng: &mut RngState) -> Result<ForwardPass> {
        let expected = self.arch.input_shape(x.shape().first().copied().unwrap_or(0));
        if x.shape() != expected.as_slice() {
            return Err(Error::ShapeMismatch {
                op: "model_forward",
                lhs: x.shape().to_vec(),
                rhs: expected,
            });
        }
        let spec = self.activation.with_mode(mode);
        let ops = Self::ops_for(self.arch);
        let mut caches = Vec::with_capacity(ops.len());
        let mut h = x.clone();
        for op in ops {
            h = match *op {
                Op::Conv(i) => {
                    let (y, cache) = self.convs[i].forward(&h)?;
                    caches.push(OpCache::Conv(cache));
                    y
                }
                Op::Linear(i) => {
                    let y = self.linears[i].forward(&h)?;
                    caches.push(OpCache::Linear(h));
                    y
                }
                Op::Act(site) => {
                    let alpha = self.alphas.get(site).map_or(spec.alpha_init, |a| a.data()[0]);
                    let (y, cache) = activation_forward(&h, &spec, alpha, rng)?;
                    caches.push(OpCache::Act(SiteRecord {
                        cache,
                        output: y.clone(),
                    }));
                    y
                }
                Op::Pool => {
                    let (y, cache) = maxpool2d_forward(&h, POOL_WINDOW)?;
                    caches.push(OpCache::Pool(cache));
                    y
                }
                Op::Flatten => {
                    let shape = h.shape().to_vec();
                    let batch = shape[0];
                    let rest = h.len() / batch;
                    caches.push(OpCache::Flatten(shape));
                    h.into_reshaped(&[batch, rest])?
                }
            };
        }
        Ok(ForwardPass { logits: h, caches })
    }

    /// Backpropagates `grad_logits` through a recorded forward pass.
    pub fn backward(&self, pass: &ForwardPass, grad_logits: &Tensor) -> Result<Gradients> {
        let ops = Self::ops_for(self.arch);
        if pass.caches.len() != ops.len() || grad_logits.shape() != pass.logits.shape() {
            return Err(Error::ShapeMismatch {
                op: "model_backward",
                lhs: grad_logits.shape().to_vec(),
                rhs: pass.logits.shape().to_vec(),
            });
        }
        let spec = self.activation;
        let mut conv_grads: Vec<Option<(Tensor, Tensor)>> = vec![None; self.convs.len()];
        let mut linear_grads: Vec<Option<(Tensor, Tensor)>> = vec![None; self.linears.len()];
        let mut alpha_grads = vec![0.0; self.alphas.len()];
        let mut g = grad_logits.clone();
        for (op, cache) in ops.iter().zip(&pass.caches).rev() {
            g = match (*op, cache) {
                (Op::Conv(i), OpCache::Conv(c)) => {
                    let grads = self.convs[i].backward(c, &g)?;
                    conv_grads[i] = Some((grads.kernels, grads.bias));
                    grads.input
                }
                (Op::Linear(i), OpCache::Linear(input)) => {
                    let grads = self.linears[i].backward(input, &g)?;
                    linear_grads[i] = Some((grads.weight, grads.bias));
                    grads.input
                }
                (Op::Act(site), OpCache::Act(rec)) => {
                    let (gx, ga) = activation_backward(&g, &rec.cache, &spec)?;
                    if let (Some(ga), Some(slot)) = (ga, alpha_grads.get_mut(site)) {
                        *slot += ga;
                    }
                    gx
                }
                (Op::Pool, OpCache::Pool(c)) => maxpool2d_backward(&g, c)?,
                (Op::Flatten, OpCache::Flatten(shape)) => g.into_reshaped(shape)?,
                _ => unreachable!("forward cache out of sync with op list"),
            };
        }
        let mut tensors = Vec::new();
        for (w, b) in conv_grads
            .into_iter()
            .chain(linear_grads)
            .map(|g| g.expect("every layer visited"))
        {
            tensors.push(w);
            tensors.push(b);
        }
        for ga in alpha_grads {
            tensors.push(Tensor::new(&[1], vec![ga])?);
        }
        Ok(Gradients { tensors })
    }
}
