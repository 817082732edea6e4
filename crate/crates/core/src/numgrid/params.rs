use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Model parameters shared by every module.
///
/// `mu` is the drift rate of the self-similar variables, `eps` the time-scale
/// parameter of the chemo-attractant equation, `k` the polynomial weight
/// exponent of `L^2_k`, `s` the homogeneous Sobolev index of the `w`
/// component and `lambda` a target exponential decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub eps: f64,
    pub k: f64,
    pub s: f64,
    pub lambda: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            eps: 0.02,
            k: 4.0,
            s: 0.5,
            lambda: 0.25,
        }
    }
}

impl ModelParams {
    pub fn new(mu: f64, eps: f64, k: f64, s: f64, lambda: f64) -> Result<Self> {
        let p = Self {
            mu,
            eps,
            k,
            s,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same as `default()` but with the given drift and time scale.
    pub fn with_mu_eps(mu: f64, eps: f64) -> Result<Self> {
        let p = Self {
            mu,
            eps,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: self.mu,
                reason: "must be positive and finite",
            });
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "eps",
                value: self.eps,
                reason: "must be nonnegative and finite",
            });
        }
        if !(self.k > 3.0 && self.k.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "k",
                value: self.k,
                reason: "weight exponent must exceed 3",
            });
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::InvalidParameter {
                name: "s",
                value: self.s,
                reason: "Sobolev index must lie in (0, 1)",
            });
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: self.lambda,
                reason: "decay target must be nonnegative",
            });
        }
        Ok(())
    }

    /// Supremum of admissible decay rates for the coupled system, `mu (1 - s)`.
    pub fn max_decay_rate(&self) -> f64 {
        self.mu * (1.0 - self.s)
    }

    /// Checks `lambda < mu (1 - s)` before `lambda` is used as a decay target.
    pub fn check_decay_target(&self) -> Result<()> {
        if self.lambda < self.max_decay_rate() {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "lambda",
                value: self.lambda,
                reason: "decay target must be below mu (1 - s)",
            })
        }
    }

    /// Default half-width of the periodic box, `16 / sqrt(mu)`.
    pub fn default_box_half_width(&self) -> f64 {
        16.0 / self.mu.sqrt()
    }
}
