use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Argmax positions recorded by [`maxpool2d_forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct MaxPoolCache {
    input_shape: Vec<usize>,
    /// Flat input index of the winner for each output element.
    argmax: Vec<usize>,
}

impl MaxPoolCache {
    pub fn argmax(&self) -> &[usize] {
        &self.argmax
    }
}

/// Non-overlapping max pooling over `[batch, ch, h, w]` with a square
/// `window` and stride equal to the window. Ties resolve to the first
/// position in row-major order within the window.
pub fn maxpool2d_forward(x: &Tensor, window: usize) -> Result<(Tensor, MaxPoolCache)> {
    let s = x.shape();
    if s.len() != 4 || window == 0 {
        return Err(Error::InvalidShape {
            shape: s.to_vec(),
            reason: "max pooling expects [batch, ch, h, w]",
        });
    }
    let (planes, h, w) = (s[0] * s[1], s[2], s[3]);
    if h % window != 0 || w % window != 0 {
        return Err(Error::InvalidShape {
            shape: s.to_vec(),
            reason: "spatial dims must be divisible by the pooling window",
        });
    }
    let (oh, ow) = (h / window, w / window);
    let mut out = vec![0.0; planes * oh * ow];
    let mut argmax = vec![0usize; planes * oh * ow];
    let data = x.data();
    for p in 0..planes {
        let plane = &data[p * h * w..(p + 1) * h * w];
        for oy in 0..oh {
            let rows = &plane[oy * window * w..(oy + 1) * window * w];
            let o_row = (p * oh + oy) * ow;
            for ox in 0..ow {
                let mut best = ox * window;
                let mut best_v = rows[best];
                for dy in 0..window {
                    let start = dy * w + ox * window;
                    for (dx, &v) in rows[start..start + window].iter().enumerate() {
                        if v > best_v {
                            best_v = v;
                            best = start + dx;
                        }
                    }
                }
                out[o_row + ox] = best_v;
                argmax[o_row + ox] = p * h * w + oy * window * w + best;
            }
        }
    }
    let cache = MaxPoolCache {
        input_shape: s.to_vec(),
        argmax,
    };
    Ok((Tensor::from_parts(vec![s[0], s[1], oh, ow], out), cache))
}

/// Routes each output gradient to the input position that won the max.
pub fn maxpool2d_backward(grad_out: &Tensor, cache: &MaxPoolCache) -> Result<Tensor> {
    if grad_out.len() != cache.argmax.len() {
        return Err(Error::ShapeMismatch {
            op: "maxpool2d_backward",
            lhs: grad_out.shape().to_vec(),
            rhs: cache.input_shape.clone(),
        });
    }
    let mut gx = vec![0.0; cache.input_shape.iter().product()];
    for (&g, &i) in grad_out.data().iter().zip(&cache.argmax) {
        gx[i] += g;
    }
    Ok(Tensor::from_parts(cache.input_shape.clone(), gx))
}
