use alloc::vec;

use crate::error::{Error, Result};
use crate::tensor::{ensure_finite, Tensor};

/// Row-wise softmax of `[batch, classes]` logits, stabilised by subtracting
/// the row maximum.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    if logits.rank() != 2 {
        return Err(Error::InvalidShape {
            shape: logits.shape().to_vec(),
            reason: "softmax expects [batch, classes]",
        });
    }
    let classes = logits.shape()[1];
    let mut out = logits.data().to_vec();
    for row in out.chunks_exact_mut(classes) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = libm::exp(*v - max);
            total += *v;
        }
        row.iter_mut().for_each(|v| *v /= total);
    }
    Ok(Tensor::from_parts(logits.shape().to_vec(), out))
}

/// Mean negative log-likelihood of `labels` under softmax(`logits`) and its
/// gradient `(softmax − onehot) / batch`.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    if logits.rank() != 2 || logits.shape()[0] != labels.len() {
        return Err(Error::ShapeMismatch {
            op: "softmax_cross_entropy",
            lhs: logits.shape().to_vec(),
            rhs: vec![labels.len()],
        });
    }
    let (batch, classes) = (logits.shape()[0], logits.shape()[1]);
    if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
        return Err(Error::LabelOutOfRange { index, label, classes });
    }
    let mut grad = logits.data().to_vec();
    let mut loss = 0.0;
    for (b, (row, &label)) in grad.chunks_exact_mut(classes).zip(labels).enumerate() {
        let z = &logits.data()[b * classes..(b + 1) * classes];
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (v, &zi) in row.iter_mut().zip(z) {
            *v = libm::exp(zi - max);
            total += *v;
        }
        // -log p[label] = log Σ exp(z - max) - (z[label] - max)
        loss += libm::log(total) - (z[label] - max);
        let scale = 1.0 / (total * batch as f64);
        row.iter_mut().for_each(|v| *v *= scale);
        row[label] -= 1.0 / batch as f64;
    }
    let loss = loss / batch as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            op: "softmax_cross_entropy",
        });
    }
    ensure_finite(&grad, "softmax_cross_entropy")?;
    Ok((loss, Tensor::from_parts(vec![batch, classes], grad)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln10() {
        let logits = Tensor::full(&[3, 10], 0.7);
        let (loss, grad) = softmax_cross_entropy(&logits, &[0, 4, 9]).unwrap();
        assert!((loss - core::f64::consts::LN_10).abs() < 1e-12);
        assert!((grad.data()[0] - (0.1 - 1.0) / 3.0).abs() < 1e-15);
        assert!((grad.data()[1] - 0.1 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn confident_logits_do_not_overflow() {
        let mut logits = Tensor::zeros(&[1, 10]);
        logits.set(&[0, 3], 1000.0).unwrap();
        let (loss, grad) = softmax_cross_entropy(&logits, &[3]).unwrap();
        assert!((0.0..1e-12).contains(&loss));
        assert!(grad.data().iter().all(|g| g.abs() < 1e-12));
        let (wrong, _) = softmax_cross_entropy(&logits, &[2]).unwrap();
        assert!((wrong - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn label_range_checked() {
        let logits = Tensor::zeros(&[2, 10]);
        assert!(matches!(
            softmax_cross_entropy(&logits, &[1, 10]),
            Err(Error::LabelOutOfRange {
                index: 1,
                label: 10,
                classes: 10
            })
        ));
        assert!(softmax_cross_entropy(&logits, &[1]).is_err());
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let logits = Tensor::new(&[2, 3], vec![1.0, 2.0, 3.0, -500.0, 0.0, 500.0]).unwrap();
        let p = softmax(&logits).unwrap();
        for row in p.data().chunks(3) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }
}
