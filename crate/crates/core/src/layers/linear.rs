use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{gemm, Layout};
use crate::rng::RngState;
use crate::tensor::{ensure_finite, sample_uniform, Tensor};

/// Fully connected layer computing `x·Wᵀ + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// `[out, in]`
    pub weight: Tensor,
    /// `[out]`
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrads {
    pub input: Tensor,
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    pub fn new(weight: Tensor, bias: Tensor) -> Result<Self> {
        if weight.rank() != 2 || bias.shape() != [weight.shape()[0]] {
            return Err(Error::ShapeMismatch {
                op: "Linear::new",
                lhs: weight.shape().to_vec(),
                rhs: bias.shape().to_vec(),
            });
        }
        Ok(Self { weight, bias })
    }

    pub fn zeros(in_features: usize, out_features: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[out_features, in_features]),
            bias: Tensor::zeros(&[out_features]),
        }
    }

    /// Weights from `U(-√(6/in), √(6/in))`, zero bias.
    pub fn kaiming_uniform(in_features: usize, out_features: usize, rng: &mut RngState) -> Self {
        let bound = libm::sqrt(6.0 / in_features as f64);
        Self {
            weight: sample_uniform(rng, &[out_features, in_features], -bound, bound).expect("valid bounds"),
            bias: Tensor::zeros(&[out_features]),
        }
    }

    pub fn in_features(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_features(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn parameter_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn check_input(&self, x: &Tensor) -> Result<usize> {
        if x.rank() != 2 || x.shape()[1] != self.in_features() {
            return Err(Error::ShapeMismatch {
                op: "linear",
                lhs: x.shape().to_vec(),
                rhs: self.weight.shape().to_vec(),
            });
        }
        Ok(x.shape()[0])
    }

    /// `[batch, in] → [batch, out]`
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let batch = self.check_input(x)?;
        let (n_in, n_out) = (self.in_features(), self.out_features());
        let mut out: Vec<f64> = Vec::with_capacity(batch * n_out);
        for _ in 0..batch {
            out.extend_from_slice(self.bias.data());
        }
        gemm(
            1.0,
            x.data(),
            Layout::row_major(batch, n_in),
            self.weight.data(),
            Layout::transposed(n_out, n_in),
            1.0,
            &mut out,
            Layout::row_major(batch, n_out),
        );
        ensure_finite(&out, "linear_forward")?;
        Ok(Tensor::from_parts(alloc::vec![batch, n_out], out))
    }

    /// Gradients given the forward input `x` and the upstream gradient.
    pub fn backward(&self, x: &Tensor, grad_out: &Tensor) -> Result<LinearGrads> {
        let batch = self.check_input(x)?;
        let (n_in, n_out) = (self.in_features(), self.out_features());
        if grad_out.shape() != [batch, n_out] {
            return Err(Error::ShapeMismatch {
                op: "linear_backward",
                lhs: grad_out.shape().to_vec(),
                rhs: alloc::vec![batch, n_out],
            });
        }
        let mut gx = alloc::vec![0.0; batch * n_in];
        gemm(
            1.0,
            grad_out.data(),
            Layout::row_major(batch, n_out),
            self.weight.data(),
            Layout::row_major(n_out, n_in),
            0.0,
            &mut gx,
            Layout::row_major(batch, n_in),
        );
        let mut gw = alloc::vec![0.0; n_out * n_in];
        gemm(
            1.0,
            grad_out.data(),
            Layout::transposed(batch, n_out),
            x.data(),
            Layout::row_major(batch, n_in),
            0.0,
            &mut gw,
            Layout::row_major(n_out, n_in),
        );
        let mut gb = alloc::vec![0.0; n_out];
        for row in grad_out.data().chunks_exact(n_out) {
            for (g, &v) in gb.iter_mut().zip(row) {
                *g += v;
            }
        }
        ensure_finite(&gx, "linear_backward")?;
        ensure_finite(&gw, "linear_backward")?;
        ensure_finite(&gb, "linear_backward")?;
        Ok(LinearGrads {
            input: Tensor::from_parts(alloc::vec![batch, n_in], gx),
            weight: Tensor::from_parts(alloc::vec![n_out, n_in], gw),
            bias: Tensor::from_parts(alloc::vec![n_out], gb),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights_pass_through() {
        let layer = Linear::new(Tensor::eye(3), Tensor::zeros(&[3])).unwrap();
        let x = Tensor::new(&[2, 3], alloc::vec![1., -2., 3., 0.5, 0., -7.]).unwrap();
        assert_eq!(layer.forward(&x).unwrap(), x);
    }

    #[test]
    fn hand_computed_forward() {
        // W = [[1,2],[3,4],[5,6]], b = [0.5, -1, 2], x = [1, -1]
        let w = Tensor::new(&[3, 2], alloc::vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let b = Tensor::new(&[3], alloc::vec![0.5, -1.0, 2.0]).unwrap();
        let layer = Linear::new(w, b).unwrap();
        let x = Tensor::new(&[1, 2], alloc::vec![1.0, -1.0]).unwrap();
        assert_eq!(layer.forward(&x).unwrap().data(), &[-0.5, -2.0, 1.0]);
        let g = layer
            .backward(&x, &Tensor::new(&[1, 3], alloc::vec![1., 0., 2.]).unwrap())
            .unwrap();
        assert_eq!(g.input.data(), &[11.0, 14.0]);
        assert_eq!(g.weight.data(), &[1., -1., 0., 0., 2., -2.]);
        assert_eq!(g.bias.data(), &[1., 0., 2.]);
    }

    #[test]
    fn shape_errors() {
        let layer = Linear::zeros(4, 2);
        assert!(layer.forward(&Tensor::zeros(&[3, 5])).is_err());
        assert!(layer
            .backward(&Tensor::zeros(&[3, 4]), &Tensor::zeros(&[3, 3]))
            .is_err());
        assert!(Linear::new(Tensor::zeros(&[2, 3]), Tensor::zeros(&[3])).is_err());
    }

    #[test]
    fn kaiming_bounds() {
        let mut rng = RngState::new(4);
        let layer = Linear::kaiming_uniform(24, 10, &mut rng);
        let bound = (6.0f64 / 24.0).sqrt();
        assert!(layer.weight.data().iter().all(|w| w.abs() < bound));
        assert!(layer.bias.data().iter().all(|&b| b == 0.0));
    }
}
