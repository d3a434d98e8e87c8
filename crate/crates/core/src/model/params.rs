use crate::error::{domain, Result};

/// Parameters of an affine forward variance model.
///
/// `alpha = H + 1/2` is canonical; `lambda` is the kernel mean reversion,
/// `vbar` and `v0` the long-run and spot variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub nu: f64,
    pub lambda: f64,
    pub rho: f64,
    pub vbar: f64,
    pub v0: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, nu: f64, lambda: f64, rho: f64, vbar: f64, v0: f64) -> Result<Self> {
        let p = ModelParams { alpha, nu, lambda, rho, vbar, v0 };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from the Hurst exponent instead of `alpha`.
    pub fn from_hurst(h: f64, nu: f64, lambda: f64, rho: f64, vbar: f64, v0: f64) -> Result<Self> {
        Self::new(h + 0.5, nu, lambda, rho, vbar, v0)
    }

    pub fn hurst(&self) -> f64 {
        self.alpha - 0.5
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.5 && self.alpha <= 1.0) {
            return domain(format!("alpha must lie in (0.5, 1], got {}", self.alpha));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return domain(format!("nu must be positive, got {}", self.nu));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return domain(format!("lambda must be non-negative, got {}", self.lambda));
        }
        if !(self.rho.abs() <= 1.0) {
            return domain(format!("rho must lie in [-1, 1], got {}", self.rho));
        }
        if !(self.vbar >= 0.0 && self.vbar.is_finite()) {
            return domain(format!("vbar must be non-negative, got {}", self.vbar));
        }
        if !(self.v0 > 0.0 && self.v0.is_finite()) {
            return domain(format!("v0 must be positive, got {}", self.v0));
        }
        Ok(())
    }
}
