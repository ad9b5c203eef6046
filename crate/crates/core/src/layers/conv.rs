use alloc::vec;

use crate::error::{Error, Result};
use crate::linalg::{gemm, Layout};
use crate::rng::RngState;
use crate::tensor::{ensure_finite, sample_uniform, Tensor};

/// 2-D cross-correlation, stride 1, symmetric zero padding.
///
/// The kernel is not flipped. Input layout is `[batch, channels, height, width]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    /// `[out_channels, in_channels, k, k]`
    pub kernels: Tensor,
    /// `[out_channels]`
    pub bias: Tensor,
    pub padding: usize,
}

/// The input seen by [`Conv2d::forward`]; the backward pass lowers it
/// again one sample at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2dCache {
    input: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv2dGrads {
    pub input: Tensor,
    pub kernels: Tensor,
    pub bias: Tensor,
}

#[derive(Clone, Copy)]
struct Geometry {
    batch: usize,
    in_ch: usize,
    out_ch: usize,
    h: usize,
    w: usize,
    k: usize,
    pad: usize,
    out_h: usize,
    out_w: usize,
}

impl Geometry {
    fn patch(&self) -> usize {
        self.in_ch * self.k * self.k
    }

    fn out_area(&self) -> usize {
        self.out_h * self.out_w
    }
}

impl Conv2d {
    pub fn new(kernels: Tensor, bias: Tensor, padding: usize) -> Result<Self> {
        let ks = kernels.shape();
        if ks.len() != 4 || ks[2] != ks[3] || bias.shape() != [ks[0]] {
            return Err(Error::ShapeMismatch {
                op: "Conv2d::new",
                lhs: ks.to_vec(),
                rhs: bias.shape().to_vec(),
            });
        }
        Ok(Self { kernels, bias, padding })
    }

    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize, padding: usize) -> Self {
        Self {
            kernels: Tensor::zeros(&[out_channels, in_channels, kernel, kernel]),
            bias: Tensor::zeros(&[out_channels]),
            padding,
        }
    }

    /// 3×3 kernels with padding 1, Kaiming-uniform weights, zero bias.
    pub fn kaiming_uniform(in_channels: usize, out_channels: usize, rng: &mut RngState) -> Self {
        let fan_in = in_channels * 9;
        let bound = libm::sqrt(6.0 / fan_in as f64);
        Self {
            kernels: sample_uniform(rng, &[out_channels, in_channels, 3, 3], -bound, bound).expect("valid bounds"),
            bias: Tensor::zeros(&[out_channels]),
            padding: 1,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn kernel_size(&self) -> usize {
        self.kernels.shape()[2]
    }

    pub fn parameter_count(&self) -> usize {
        self.kernels.len() + self.bias.len()
    }

    fn geometry(&self, shape: &[usize]) -> Result<Geometry> {
        if shape.len() != 4 || shape[1] != self.in_channels() {
            return Err(Error::ShapeMismatch {
                op: "conv2d",
                lhs: shape.to_vec(),
                rhs: self.kernels.shape().to_vec(),
            });
        }
        let k = self.kernel_size();
        let (h, w) = (shape[2], shape[3]);
        if h + 2 * self.padding < k || w + 2 * self.padding < k {
            return Err(Error::InvalidShape {
                shape: shape.to_vec(),
                reason: "padded input smaller than the kernel",
            });
        }
        Ok(Geometry {
            batch: shape[0],
            in_ch: shape[1],
            out_ch: self.out_channels(),
            h,
            w,
            k,
            pad: self.padding,
            out_h: h + 2 * self.padding - k + 1,
            out_w: w + 2 * self.padding - k + 1,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Conv2dCache)> {
        let g = self.geometry(x.shape())?;
        let (patch, area) = (g.patch(), g.out_area());
        let mut col = vec![0.0; patch * area];
        let mut out = vec![0.0; g.batch * g.out_ch * area];
        let sample_in = g.in_ch * g.h * g.w;
        for b in 0..g.batch {
            im2col(&x.data()[b * sample_in..(b + 1) * sample_in], &mut col, &g);
            let dst = &mut out[b * g.out_ch * area..(b + 1) * g.out_ch * area];
            for (o, row) in dst.chunks_exact_mut(area).enumerate() {
                row.fill(self.bias.data()[o]);
            }
            gemm(
                1.0,
                self.kernels.data(),
                Layout::row_major(g.out_ch, patch),
                &col,
                Layout::row_major(patch, area),
                1.0,
                dst,
                Layout::row_major(g.out_ch, area),
            );
        }
        ensure_finite(&out, "conv2d_forward")?;
        let cache = Conv2dCache { input: x.clone() };
        Ok((
            Tensor::from_parts(vec![g.batch, g.out_ch, g.out_h, g.out_w], out),
            cache,
        ))
    }

    pub fn backward(&self, cache: &Conv2dCache, grad_out: &Tensor) -> Result<Conv2dGrads> {
        let g = self.geometry(cache.input.shape())?;
        let expected = [g.batch, g.out_ch, g.out_h, g.out_w];
        if grad_out.shape() != expected {
            return Err(Error::ShapeMismatch {
                op: "conv2d_backward",
                lhs: grad_out.shape().to_vec(),
                rhs: expected.to_vec(),
            });
        }
        let (patch, area) = (g.patch(), g.out_area());
        let sample_in = g.in_ch * g.h * g.w;
        let mut gk = vec![0.0; g.out_ch * patch];
        let mut gb = vec![0.0; g.out_ch];
        let mut gx = vec![0.0; g.batch * sample_in];
        let mut gcol = vec![0.0; patch * area];
        let mut col = vec![0.0; patch * area];
        for b in 0..g.batch {
            let go = &grad_out.data()[b * g.out_ch * area..(b + 1) * g.out_ch * area];
            im2col(&cache.input.data()[b * sample_in..(b + 1) * sample_in], &mut col, &g);
            for (o, row) in go.chunks_exact(area).enumerate() {
                gb[o] += row.iter().sum::<f64>();
            }
            gemm(
                1.0,
                go,
                Layout::row_major(g.out_ch, area),
                &col,
                Layout::transposed(patch, area),
                1.0,
                &mut gk,
                Layout::row_major(g.out_ch, patch),
            );
            gemm(
                1.0,
                self.kernels.data(),
                Layout::transposed(g.out_ch, patch),
                go,
                Layout::row_major(g.out_ch, area),
                0.0,
                &mut gcol,
                Layout::row_major(patch, area),
            );
            col2im(&gcol, &mut gx[b * sample_in..(b + 1) * sample_in], &g);
        }
        ensure_finite(&gx, "conv2d_backward")?;
        ensure_finite(&gk, "conv2d_backward")?;
        ensure_finite(&gb, "conv2d_backward")?;
        Ok(Conv2dGrads {
            input: Tensor::from_parts(cache.input.shape().to_vec(), gx),
            kernels: Tensor::from_parts(self.kernels.shape().to_vec(), gk),
            bias: Tensor::from_parts(vec![g.out_ch], gb),
        })
    }
}

/// Lowers one sample `[in_ch, h, w]` into `[in_ch·k·k, out_h·out_w]`.
fn im2col(src: &[f64], col: &mut [f64], g: &Geometry) {
    let area = g.out_area();
    for c in 0..g.in_ch {
        let plane = &src[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ki in 0..g.k {
            for kj in 0..g.k {
                let row = &mut col[((c * g.k + ki) * g.k + kj) * area..][..area];
                for oy in 0..g.out_h {
                    let iy = (oy + ki) as isize - g.pad as isize;
                    let dst = &mut row[oy * g.out_w..(oy + 1) * g.out_w];
                    if iy < 0 || iy >= g.h as isize {
                        dst.fill(0.0);
                        continue;
                    }
                    let line = &plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                    for (ox, d) in dst.iter_mut().enumerate() {
                        let ix = (ox + kj) as isize - g.pad as isize;
                        *d = if ix < 0 || ix >= g.w as isize {
                            0.0
                        } else {
                            line[ix as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters column gradients back onto the input.
fn col2im(col: &[f64], dst: &mut [f64], g: &Geometry) {
    let area = g.out_area();
    for c in 0..g.in_ch {
        let plane = &mut dst[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ki in 0..g.k {
            for kj in 0..g.k {
                let row = &col[((c * g.k + ki) * g.k + kj) * area..][..area];
                for oy in 0..g.out_h {
                    let iy = (oy + ki) as isize - g.pad as isize;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    let line = &mut plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                    for (ox, &v) in row[oy * g.out_w..(oy + 1) * g.out_w].iter().enumerate() {
                        let ix = (ox + kj) as isize - g.pad as isize;
                        if ix >= 0 && ix < g.w as isize {
                            line[ix as usize] += v;
                        }
                    }
                }
            }
        }
    }
}
