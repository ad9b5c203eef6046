mod common;

use common::*;
use nrelu_core::activation::*;
use nrelu_core::layers::{maxpool2d_backward, maxpool2d_forward, softmax_cross_entropy, Conv2d, Linear};
use nrelu_core::{ActivationKind, ActivationSpec, Arch, Mode, Model, ModelConfig, RngState, Tensor};

const REL_TOL: f64 = 1e-4;
const ABS_TOL: f64 = 1e-6;
const KINK_BAND: f64 = 1e-3;

fn assert_close(analytic: &[f64], x: &[f64], f: impl Fn(&[f64]) -> f64) {
    for (i, &a) in analytic.iter().enumerate() {
        let n = central_diff(x, i, FD_STEP, &f);
        assert!((a - n).abs() <= ABS_TOL, "elem {i}: analytic {a} vs fd {n}");
        assert!(rel_err(a, n) <= REL_TOL, "elem {i}: analytic {a} vs fd {n}");
    }
}

fn elementwise_case(seed: u64, forward: impl Fn(&Tensor) -> Tensor, backward: impl Fn(&Tensor, &Tensor) -> Tensor) {
    let mut rng = RngState::new(seed);
    let x = away_from_kink(&mut rng, 200, KINK_BAND, 3.0);
    let w = uniform(&mut rng, &[200], -1.0, 1.0);
    let analytic = backward(&w, &x);
    assert_close(analytic.data(), x.data(), |xs| {
        probe(&forward(&tensor(&[200], xs.to_vec())), &w)
    });
}

#[test]
fn relu_gradient() {
    elementwise_case(1, relu_forward, |g, x| relu_backward(g, x).unwrap());
}

#[test]
fn leaky_relu_gradient() {
    for slope in [0.01, 0.2] {
        elementwise_case(
            2,
            |x| leaky_relu_forward(x, slope),
            |g, x| leaky_relu_backward(g, x, slope).unwrap(),
        );
    }
}

#[test]
fn gelu_gradient() {
    elementwise_case(3, gelu_forward, |g, x| gelu_backward(g, x).unwrap());
}

#[test]
fn prelu_gradient_wrt_input_and_alpha() {
    let alpha = 0.25;
    elementwise_case(
        4,
        |x| prelu_forward(x, alpha),
        |g, x| prelu_backward(g, x, alpha).unwrap().0,
    );

    let mut rng = RngState::new(5);
    let x = away_from_kink(&mut rng, 100, KINK_BAND, 3.0);
    let w = uniform(&mut rng, &[100], -1.0, 1.0);
    let (_, ga) = prelu_backward(&w, &x, alpha).unwrap();
    assert_close(&[ga], &[alpha], |a| probe(&prelu_forward(&x, a[0]), &w));
}

#[test]
fn rrelu_gradient_with_frozen_slopes() {
    let spec = ActivationSpec::rrelu(1.0 / 8.0, 1.0 / 3.0);
    let mut rng = RngState::new(6);
    let x = away_from_kink(&mut rng, 200, KINK_BAND, 3.0);
    let w = uniform(&mut rng, &[200], -1.0, 1.0);
    let (_, cache) = rrelu_forward(&x, &spec, &mut rng).unwrap();
    let slopes = cache.slopes.clone().unwrap();
    let analytic = rrelu_backward(&w, &cache, &spec).unwrap();
    assert_close(analytic.data(), x.data(), |xs| {
        probe(&rrelu_apply(&tensor(&[200], xs.to_vec()), &slopes).unwrap(), &w)
    });
    // eval mode uses the midpoint slope
    let eval = spec.with_mode(Mode::Eval);
    let (_, cache) = rrelu_forward(&x, &eval, &mut rng).unwrap();
    let analytic = rrelu_backward(&w, &cache, &eval).unwrap();
    let mid = rrelu_eval_slope(&eval);
    assert_close(analytic.data(), x.data(), |xs| {
        probe(&leaky_relu_forward(&tensor(&[200], xs.to_vec()), mid), &w)
    });
}

#[test]
fn nrelu_gradient_with_frozen_noise() {
    for sigma in [0.05, 0.1, 0.2] {
        let spec = ActivationSpec::nrelu(sigma);
        let mut rng = RngState::new(7);
        let x = away_from_kink(&mut rng, 300, KINK_BAND, 3.0);
        let w = uniform(&mut rng, &[300], -1.0, 1.0);
        let (_, cache) = nrelu_forward(&x, &spec, &mut rng).unwrap();
        let noise = cache.noise.clone().unwrap();
        let analytic = nrelu_backward(&w, &cache).unwrap();
        assert_close(analytic.data(), x.data(), |xs| {
            probe(&nrelu_apply(&tensor(&[300], xs.to_vec()), &noise).unwrap(), &w)
        });
    }
}

#[test]
fn nrelu_gradient_positive_region() {
    let mut rng = RngState::new(8);
    let x = uniform(&mut rng, &[100], 1e-3, 4.0);
    let w = uniform(&mut rng, &[100], -1.0, 1.0);
    let (_, cache) = nrelu_forward(&x, &ActivationSpec::nrelu(0.1), &mut rng).unwrap();
    let noise = cache.noise.clone().unwrap();
    let analytic = nrelu_backward(&w, &cache).unwrap();
    for i in 0..100 {
        let n = central_diff(x.data(), i, FD_STEP, |xs| {
            probe(&nrelu_apply(&tensor(&[100], xs.to_vec()), &noise).unwrap(), &w)
        });
        assert!((analytic.data()[i] - n).abs() <= 1e-6);
    }
}

#[test]
fn linear_gradients() {
    let mut rng = RngState::new(10);
    let layer = Linear::new(
        uniform(&mut rng, &[5, 7], -1.0, 1.0),
        uniform(&mut rng, &[5], -1.0, 1.0),
    )
    .unwrap();
    let x = uniform(&mut rng, &[3, 7], -1.0, 1.0);
    let w = uniform(&mut rng, &[3, 5], -1.0, 1.0);
    let g = layer.backward(&x, &w).unwrap();

    let worst = check_gradient(x.data(), g.input.data(), FD_STEP, |xs| {
        probe(&layer.forward(&tensor(&[3, 7], xs.to_vec())).unwrap(), &w)
    });
    assert!(worst <= REL_TOL, "input {worst}");
    let worst = check_gradient(layer.weight.data(), g.weight.data(), FD_STEP, |ws| {
        let l = Linear::new(tensor(&[5, 7], ws.to_vec()), layer.bias.clone()).unwrap();
        probe(&l.forward(&x).unwrap(), &w)
    });
    assert!(worst <= REL_TOL, "weight {worst}");
    let worst = check_gradient(layer.bias.data(), g.bias.data(), FD_STEP, |bs| {
        let l = Linear::new(layer.weight.clone(), tensor(&[5], bs.to_vec())).unwrap();
        probe(&l.forward(&x).unwrap(), &w)
    });
    assert!(worst <= REL_TOL, "bias {worst}");
}

#[test]
fn conv2d_gradients() {
    let mut rng = RngState::new(11);
    let kshape = [3, 2, 3, 3];
    let layer = Conv2d::new(
        uniform(&mut rng, &kshape, -1.0, 1.0),
        uniform(&mut rng, &[3], -1.0, 1.0),
        1,
    )
    .unwrap();
    let xshape = [2, 2, 5, 6];
    let x = uniform(&mut rng, &xshape, -1.0, 1.0);
    let (y, cache) = layer.forward(&x).unwrap();
    let w = uniform(&mut rng, y.shape(), -1.0, 1.0);
    let g = layer.backward(&cache, &w).unwrap();

    let worst = check_gradient(x.data(), g.input.data(), FD_STEP, |xs| {
        probe(&layer.forward(&tensor(&xshape, xs.to_vec())).unwrap().0, &w)
    });
    assert!(worst <= REL_TOL, "input {worst}");
    let worst = check_gradient(layer.kernels.data(), g.kernels.data(), FD_STEP, |ks| {
        let l = Conv2d::new(tensor(&kshape, ks.to_vec()), layer.bias.clone(), 1).unwrap();
        probe(&l.forward(&x).unwrap().0, &w)
    });
    assert!(worst <= REL_TOL, "kernels {worst}");
    let worst = check_gradient(layer.bias.data(), g.bias.data(), FD_STEP, |bs| {
        let l = Conv2d::new(layer.kernels.clone(), tensor(&[3], bs.to_vec()), 1).unwrap();
        probe(&l.forward(&x).unwrap().0, &w)
    });
    assert!(worst <= REL_TOL, "bias {worst}");
}

#[test]
fn maxpool_gradient() {
    let mut rng = RngState::new(12);
    let shape = [2, 3, 4, 6];
    let x = uniform(&mut rng, &shape, -1.0, 1.0);
    let (y, cache) = maxpool2d_forward(&x, 2).unwrap();
    let w = uniform(&mut rng, y.shape(), -1.0, 1.0);
    let g = maxpool2d_backward(&w, &cache).unwrap();
    let worst = check_gradient(x.data(), g.data(), FD_STEP, |xs| {
        probe(&maxpool2d_forward(&tensor(&shape, xs.to_vec()), 2).unwrap().0, &w)
    });
    assert!(worst <= REL_TOL, "{worst}");
}

#[test]
fn softmax_cross_entropy_gradient() {
    let mut rng = RngState::new(13);
    let logits = uniform(&mut rng, &[4, 10], -3.0, 3.0);
    let labels = [3, 0, 9, 3];
    let (_, g) = softmax_cross_entropy(&logits, &labels).unwrap();
    let worst = check_gradient(logits.data(), g.data(), FD_STEP, |ls| {
        softmax_cross_entropy(&tensor(&[4, 10], ls.to_vec()), &labels)
            .unwrap()
            .0
    });
    assert!(worst <= REL_TOL, "{worst}");
}

/// Loss of `model` on a fixed batch, replaying the same noise stream.
fn replay_loss(model: &Model, x: &Tensor, labels: &[usize], noise: &RngState) -> f64 {
    let pass = model.forward(x, Mode::Train, &mut noise.clone()).unwrap();
    softmax_cross_entropy(&pass.logits, labels).unwrap().0
}

fn end_to_end(arch: Arch, spec: ActivationSpec, seed: u64) -> f64 {
    let model = Model::new(&ModelConfig {
        arch,
        activation: spec,
        init_seed: seed,
    })
    .unwrap();
    let mut rng = RngState::new(seed ^ 0xabc);
    let x = uniform(&mut rng, &arch.input_shape(2), 0.0, 1.0);
    let labels = [rng.below(10) as usize, rng.below(10) as usize];
    let noise = rng.fork(99);
    let pass = model.forward(&x, Mode::Train, &mut noise.clone()).unwrap();
    let (_, g) = softmax_cross_entropy(&pass.logits, &labels).unwrap();
    let grads = model.backward(&pass, &g).unwrap();

    let sizes: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
    let total: usize = sizes.iter().sum();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut flat = rng.below(total as u64) as usize;
        let mut which = 0;
        while flat >= sizes[which] {
            flat -= sizes[which];
            which += 1;
        }
        let analytic = grads.tensors[which].data()[flat];
        let perturbed = |delta: f64| {
            let mut m = model.clone();
            let p = &mut m.params_mut()[which];
            let mut idx = Vec::new();
            let mut rem = flat;
            for d in p.shape().iter().rev() {
                idx.push(rem % d);
                rem /= d;
            }
            idx.reverse();
            let v = p.get(&idx).unwrap();
            p.set(&idx, v + delta).unwrap();
            replay_loss(&m, &x, &labels, &noise)
        };
        let numeric = (perturbed(FD_STEP) - perturbed(-FD_STEP)) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(analytic, numeric));
    }
    worst
}

#[test]
fn end_to_end_mlp() {
    for kind in ActivationKind::ALL {
        let spec = ActivationSpec::new(kind).with_sigma(0.1);
        let worst = end_to_end(Arch::Mlp, spec, 21);
        assert!(worst <= 1e-3, "{kind}: {worst}");
    }
}

#[test]
fn end_to_end_cnn() {
    for kind in ActivationKind::ALL {
        let spec = ActivationSpec::new(kind).with_sigma(0.1);
        let worst = end_to_end(Arch::Cnn, spec, 22);
        assert!(worst <= 1e-3, "{kind}: {worst}");
    }
}

#[test]
fn prelu_alpha_end_to_end() {
    // the slope of each site is a parameter; check all of them directly
    let config = ModelConfig {
        arch: Arch::Mlp,
        activation: ActivationSpec::prelu(0.25),
        init_seed: 3,
    };
    let model = Model::new(&config).unwrap();
    let mut rng = RngState::new(4);
    let x = uniform(&mut rng, &[2, 784], 0.0, 1.0);
    let labels = [1, 7];
    let noise = RngState::new(0);
    let pass = model.forward(&x, Mode::Train, &mut noise.clone()).unwrap();
    let (_, g) = softmax_cross_entropy(&pass.logits, &labels).unwrap();
    let grads = model.backward(&pass, &g).unwrap();
    let n = model.params().len();
    for site in 0..2 {
        let which = n - 2 + site;
        let analytic = grads.tensors[which].data()[0];
        let at = |delta: f64| {
            let mut m = model.clone();
            let p = &mut m.params_mut()[which];
            let v = p.data()[0];
            p.set(&[0], v + delta).unwrap();
            replay_loss(&m, &x, &labels, &noise)
        };
        let numeric = (at(FD_STEP) - at(-FD_STEP)) / (2.0 * FD_STEP);
        assert!(
            rel_err(analytic, numeric) <= 1e-4,
            "site {site}: {analytic} vs {numeric}"
        );
    }
}
