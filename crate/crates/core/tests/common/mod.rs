#![allow(dead_code)]

use nrelu_core::{RngState, Tensor};

pub const FD_STEP: f64 = 1e-5;

/// Central difference of `f` with respect to element `i` of `x`.
pub fn central_diff(x: &[f64], i: usize, h: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let mut plus = x.to_vec();
    plus[i] += h;
    let mut minus = x.to_vec();
    minus[i] -= h;
    (f(&plus) - f(&minus)) / (2.0 * h)
}

/// `|a − n| / max(|a|, |n|, floor)`.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central-difference check of every element of `x`. Returns the worst
/// relative error.
pub fn check_gradient(x: &[f64], analytic: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    assert_eq!(x.len(), analytic.len());
    (0..x.len())
        .map(|i| rel_err(analytic[i], central_diff(x, i, h, &mut f)))
        .fold(0.0, f64::max)
}

/// `Σ out ⊙ weights`, the scalar used to turn a layer into a loss.
pub fn probe(out: &Tensor, weights: &Tensor) -> f64 {
    out.data().iter().zip(weights.data()).map(|(a, b)| a * b).sum()
}

pub fn uniform(rng: &mut RngState, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    nrelu_core::sample_uniform(rng, shape, lo, hi).unwrap()
}

/// Uniform in `[-hi, -band] ∪ [band, hi]`.
pub fn away_from_kink(rng: &mut RngState, n: usize, band: f64, hi: f64) -> Tensor {
    let data = (0..n)
        .map(|_| {
            let mag = rng.uniform(band, hi);
            if rng.next_f64() < 0.5 {
                -mag
            } else {
                mag
            }
        })
        .collect();
    Tensor::new(&[n], data).unwrap()
}

pub fn tensor(shape: &[usize], data: Vec<f64>) -> Tensor {
    Tensor::new(shape, data).unwrap()
}
