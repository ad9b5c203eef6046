//! Manually differentiated layers and the classification loss.

mod conv;
mod linear;
mod loss;
mod pool;

pub use conv::{Conv2d, Conv2dCache, Conv2dGrads};
pub use linear::{Linear, LinearGrads};
pub use loss::{softmax, softmax_cross_entropy};
pub use pool::{maxpool2d_backward, maxpool2d_forward, MaxPoolCache};
