//! Epoch-indexed noise level for N-ReLU.

use core::f64::consts::PI;

use crate::error::{param, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaSchedule {
    /// Constant σ.
    Fixed { sigma0: f64 },
    /// `σ_t = σ₀ · ½(1 + cos(πt/T))`, decaying from σ₀ at `t = 0` to 0 at `t = T`.
    Cosine { sigma0: f64, total_epochs: u32 },
}

impl SigmaSchedule {
    pub fn sigma0(&self) -> f64 {
        match *self {
            SigmaSchedule::Fixed { sigma0 } | SigmaSchedule::Cosine { sigma0, .. } => sigma0,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            SigmaSchedule::Fixed { .. } => "fixed",
            SigmaSchedule::Cosine { .. } => "cosine",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s0 = self.sigma0();
        if !(s0 >= 0.0) || !s0.is_finite() {
            return Err(param("sigma0", "must be finite and non-negative"));
        }
        if let SigmaSchedule::Cosine { total_epochs: 0, .. } = self {
            return Err(param("total_epochs", "must be positive"));
        }
        Ok(())
    }

    /// σ in effect during epoch `t` (0-based, `t` completed epochs).
    pub fn sigma_at(&self, epoch: u32) -> Result<f64> {
        self.validate()?;
        match *self {
            SigmaSchedule::Fixed { sigma0 } => Ok(sigma0),
            SigmaSchedule::Cosine { sigma0, total_epochs } => {
                if epoch > total_epochs {
                    return Err(param("epoch", alloc::format!("{epoch} outside 0..={total_epochs}")));
                }
                let phase = PI * epoch as f64 / total_epochs as f64;
                Ok(sigma0 * 0.5 * (1.0 + libm::cos(phase)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_is_constant() {
        let s = SigmaSchedule::Fixed { sigma0: 0.05 };
        for t in [0, 3, 100] {
            assert_eq!(s.sigma_at(t).unwrap(), 0.05);
        }
    }

    #[test]
    fn cosine_endpoints_and_midpoint() {
        let s = SigmaSchedule::Cosine {
            sigma0: 0.20,
            total_epochs: 8,
        };
        assert_eq!(s.sigma_at(0).unwrap(), 0.20);
        assert!(s.sigma_at(8).unwrap().abs() <= 1e-15);
        assert!((s.sigma_at(4).unwrap() - 0.10).abs() <= 1e-15);
        assert!(s.sigma_at(9).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SigmaSchedule::Fixed { sigma0: -0.1 }.sigma_at(0).is_err());
        assert!(SigmaSchedule::Cosine {
            sigma0: 0.1,
            total_epochs: 0
        }
        .sigma_at(0)
        .is_err());
    }
}
