//! Dense row-major `f64` tensors.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{param, Error, Result};
use crate::linalg::{gemm, Layout};
use crate::rng::RngState;

/// Dense N-dimensional array, row-major.
///
/// Every dimension is positive, `data.len()` equals the product of the shape
/// and, after any public operation, every element is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::InvalidShape {
            shape: shape.to_vec(),
            reason: "rank must be at least 1",
        });
    }
    if shape.contains(&0) {
        return Err(Error::InvalidShape {
            shape: shape.to_vec(),
            reason: "dimensions must be positive",
        });
    }
    Ok(shape.iter().product())
}

pub(crate) fn ensure_finite(data: &[f64], op: &'static str) -> Result<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { op })
    }
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n = check_shape(shape)?;
        if n != data.len() {
            return Err(Error::InvalidShape {
                shape: shape.to_vec(),
                reason: "element count does not match data length",
            });
        }
        ensure_finite(&data, "Tensor::new")?;
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Builds a tensor whose contents the caller guarantees finite.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    /// Panics if `shape` has a zero dimension or is empty.
    pub fn full(shape: &[usize], value: f64) -> Self {
        let n = check_shape(shape).expect("Tensor::full shape");
        assert!(value.is_finite(), "Tensor::full value must be finite");
        Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn zeros_like(other: &Tensor) -> Self {
        Self::zeros(&other.shape)
    }

    /// Square identity matrix.
    pub fn eye(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn flat_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.shape.len() || index.iter().zip(&self.shape).any(|(i, d)| i >= d) {
            return Err(Error::ShapeMismatch {
                op: "index",
                lhs: self.shape.clone(),
                rhs: index.to_vec(),
            });
        }
        Ok(index.iter().zip(&self.shape).fold(0, |acc, (&i, &d)| acc * d + i))
    }

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[self.flat_index(index)?])
    }

    pub fn set(&mut self, index: &[usize], value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: "Tensor::set" });
        }
        let i = self.flat_index(index)?;
        self.data[i] = value;
        Ok(())
    }

    pub fn fill(&mut self, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: "Tensor::fill" });
        }
        self.data.iter_mut().for_each(|v| *v = value);
        Ok(())
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        self.clone().into_reshaped(shape)
    }

    pub fn into_reshaped(mut self, shape: &[usize]) -> Result<Tensor> {
        let n = check_shape(shape)?;
        if n != self.data.len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                lhs: self.shape,
                rhs: shape.to_vec(),
            });
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    fn zip_with(&self, other: &Tensor, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                op,
                lhs: self.shape.clone(),
                rhs: other.shape.clone(),
            });
        }
        let data: Vec<f64> = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        ensure_finite(&data, op)?;
        Ok(Tensor::from_parts(self.shape.clone(), data))
    }

    fn map(&self, op: &'static str, f: impl Fn(f64) -> f64) -> Result<Tensor> {
        let data: Vec<f64> = self.data.iter().map(|&a| f(a)).collect();
        ensure_finite(&data, op)?;
        Ok(Tensor::from_parts(self.shape.clone(), data))
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "mul", |a, b| a * b)
    }

    pub fn scale(&self, factor: f64) -> Result<Tensor> {
        self.map("scale", |a| a * factor)
    }

    pub fn abs(&self) -> Tensor {
        Tensor::from_parts(self.shape.clone(), self.data.iter().map(|a| a.abs()).collect())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    fn reduce_axis(&self, axis: usize, op: &'static str, init: f64, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        if axis >= self.shape.len() {
            return Err(Error::InvalidShape {
                shape: self.shape.clone(),
                reason: "reduction axis out of range",
            });
        }
        let outer: usize = self.shape[..axis].iter().product();
        let len = self.shape[axis];
        let inner: usize = self.shape[axis + 1..].iter().product();
        let mut out = vec![init; outer * inner];
        for o in 0..outer {
            for k in 0..len {
                let src = &self.data[(o * len + k) * inner..(o * len + k + 1) * inner];
                let dst = &mut out[o * inner..(o + 1) * inner];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = f(*d, s);
                }
            }
        }
        let mut shape: Vec<usize> = self
            .shape
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != axis)
            .map(|(_, &d)| d)
            .collect();
        if shape.is_empty() {
            shape.push(1);
        }
        ensure_finite(&out, op)?;
        Ok(Tensor::from_parts(shape, out))
    }

    /// Sum along `axis`; the axis is removed from the shape.
    pub fn sum_axis(&self, axis: usize) -> Result<Tensor> {
        self.reduce_axis(axis, "sum_axis", 0.0, |a, b| a + b)
    }

    /// Maximum along `axis`; the axis is removed from the shape.
    pub fn max_reduce(&self, axis: usize) -> Result<Tensor> {
        self.reduce_axis(axis, "max_reduce", f64::NEG_INFINITY, f64::max)
    }

    /// Matrix product of two rank-2 tensors.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || other.rank() != 2 || self.shape[1] != other.shape[0] {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs: self.shape.clone(),
                rhs: other.shape.clone(),
            });
        }
        let (m, k, n) = (self.shape[0], self.shape[1], other.shape[1]);
        let mut out = vec![0.0; m * n];
        gemm(
            1.0,
            &self.data,
            Layout::row_major(m, k),
            &other.data,
            Layout::row_major(k, n),
            0.0,
            &mut out,
            Layout::row_major(m, n),
        );
        ensure_finite(&out, "matmul")?;
        Ok(Tensor::from_parts(vec![m, n], out))
    }

    /// Transpose of a rank-2 tensor.
    pub fn transpose(&self) -> Result<Tensor> {
        if self.rank() != 2 {
            return Err(Error::InvalidShape {
                shape: self.shape.clone(),
                reason: "transpose needs a rank-2 tensor",
            });
        }
        let (r, c) = (self.shape[0], self.shape[1]);
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = self.data[i * c + j];
            }
        }
        Ok(Tensor::from_parts(vec![c, r], out))
    }
}

/// I.i.d. `N(mean, std²)` samples. `std == 0` yields a constant tensor and
/// consumes no randomness.
pub fn sample_gaussian(rng: &mut RngState, shape: &[usize], mean: f64, std: f64) -> Result<Tensor> {
    if !(std >= 0.0) || !std.is_finite() {
        return Err(param("std", "must be finite and non-negative"));
    }
    if !mean.is_finite() {
        return Err(param("mean", "must be finite"));
    }
    let n = check_shape(shape)?;
    let data = if std == 0.0 {
        vec![mean; n]
    } else {
        (0..n).map(|_| rng.normal(mean, std)).collect()
    };
    Ok(Tensor::from_parts(shape.to_vec(), data))
}

/// I.i.d. samples from `U[lo, hi)`. A degenerate interval yields a constant
/// tensor.
pub fn sample_uniform(rng: &mut RngState, shape: &[usize], lo: f64, hi: f64) -> Result<Tensor> {
    if !lo.is_finite() || !hi.is_finite() {
        return Err(param("lo/hi", "bounds must be finite"));
    }
    if lo > hi {
        return Err(param("lo/hi", "lower bound exceeds upper bound"));
    }
    let n = check_shape(shape)?;
    let data = if lo == hi {
        vec![lo; n]
    } else {
        (0..n).map(|_| rng.uniform(lo, hi)).collect()
    };
    Ok(Tensor::from_parts(shape.to_vec(), data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape, data.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(Tensor::new(&[2, 2], vec![1.0; 3]).is_err());
        assert!(Tensor::new(&[0, 2], vec![]).is_err());
        assert!(Tensor::new(&[], vec![]).is_err());
        assert!(matches!(
            Tensor::new(&[2], vec![1.0, f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn matmul_hand_cases() {
        let i = Tensor::eye(2);
        let b = t(&[2, 2], &[3., 4., 5., 6.]);
        assert_eq!(i.matmul(&b).unwrap(), b);
        let a = t(&[1, 2], &[1., 2.]);
        let c = t(&[2, 1], &[3., 4.]);
        assert_eq!(a.matmul(&c).unwrap().data(), &[11.0]);
    }

    #[test]
    fn matmul_shape_mismatch() {
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[2, 3]);
        assert!(matches!(a.matmul(&b), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn elementwise_basics() {
        let x = t(&[3], &[-1., 2., 0.]);
        assert_eq!(x.abs().data(), &[1., 2., 0.]);
        assert_eq!(t(&[2], &[2., 4.]).mean(), 3.0);
        let y = t(&[3], &[1., 1., 1.]);
        assert_eq!(x.add(&y).unwrap().data(), &[0., 3., 1.]);
        assert_eq!(x.sub(&y).unwrap().data(), &[-2., 1., -1.]);
        assert_eq!(x.mul(&x).unwrap().data(), &[1., 4., 0.]);
        assert_eq!(x.scale(-2.0).unwrap().data(), &[2., -4., -0.]);
        assert!(x.add(&Tensor::zeros(&[2])).is_err());
    }

    #[test]
    fn overflow_is_reported() {
        let x = t(&[1], &[f64::MAX]);
        assert!(matches!(x.add(&x), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn axis_reductions() {
        let x = t(&[2, 3], &[1., 5., 3., 4., 2., 6.]);
        assert_eq!(x.max_reduce(0).unwrap().data(), &[4., 5., 6.]);
        assert_eq!(x.max_reduce(1).unwrap().data(), &[5., 6.]);
        assert_eq!(x.sum_axis(1).unwrap().data(), &[9., 12.]);
        assert_eq!(x.sum_axis(1).unwrap().shape(), &[2]);
        assert!(x.sum_axis(2).is_err());
        assert_eq!(t(&[3], &[1., 2., 3.]).sum_axis(0).unwrap().shape(), &[1]);
    }

    #[test]
    fn degenerate_sampling() {
        let mut rng = RngState::new(0);
        let g = sample_gaussian(&mut rng, &[4], 0.0, 0.0).unwrap();
        assert_eq!(g.data(), &[0.0; 4]);
        let u = sample_uniform(&mut rng, &[5], 0.5, 0.5).unwrap();
        assert!(u.data().iter().all(|&v| v == 0.5));
        assert!(sample_gaussian(&mut rng, &[4], 0.0, -1.0).is_err());
        assert!(sample_uniform(&mut rng, &[4], 1.0, 0.0).is_err());
    }

    #[test]
    fn transpose_roundtrip() {
        let x = t(&[2, 3], &[1., 2., 3., 4., 5., 6.]);
        let xt = x.transpose().unwrap();
        assert_eq!(xt.shape(), &[3, 2]);
        assert_eq!(xt.data(), &[1., 4., 2., 5., 3., 6.]);
        assert_eq!(xt.transpose().unwrap(), x);
    }

    #[test]
    fn index_access() {
        let mut x = Tensor::zeros(&[2, 3]);
        x.set(&[1, 2], 7.0).unwrap();
        assert_eq!(x.get(&[1, 2]).unwrap(), 7.0);
        assert_eq!(x.data()[5], 7.0);
        assert!(x.get(&[2, 0]).is_err());
        assert!(x.set(&[0, 0], f64::INFINITY).is_err());
    }
}
