use statrs::function::gamma::ln_gamma;

use super::bessel::bessel_k_scaled;
use crate::error::{Error, Result};

/// Matérn covariance parameters; distances are in cell units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaternParams {
    pub rho: f64,
    pub nu: f64,
    pub sigma2: f64,
}

impl MaternParams {
    pub fn new(rho: f64, nu: f64) -> Result<Self> {
        Self::with_variance(rho, nu, 1.0)
    }

    pub fn with_variance(rho: f64, nu: f64, sigma2: f64) -> Result<Self> {
        let p = Self { rho, nu, sigma2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.rho) && ok(self.nu) && ok(self.sigma2) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "Matérn parameters must be positive and finite: rho {}, nu {}, sigma2 {}",
                self.rho, self.nu, self.sigma2
            )))
        }
    }
}

/// `σ² 2^{1−ν}/Γ(ν) · x^ν K_ν(x)` with `x = √(2ν) d/ρ`; σ² at d = 0.
pub fn matern_cov(d: f64, p: &MaternParams) -> Result<f64> {
    p.validate()?;
    if !d.is_finite() || d < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "distance must be >= 0, got {d}"
        )));
    }
    if d == 0.0 {
        return Ok(p.sigma2);
    }
    let x = (2.0 * p.nu).sqrt() * d / p.rho;
    if x > 1400.0 {
        return Ok(0.0);
    }
    let log_front = (1.0 - p.nu) * std::f64::consts::LN_2 - ln_gamma(p.nu) + p.nu * x.ln() - x;
    Ok(p.sigma2 * log_front.exp() * bessel_k_scaled(p.nu, x))
}
