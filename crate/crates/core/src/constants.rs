//! Normalization constants of the singular-integral fractional Laplacian.
//!
//! `(-Δ)^s u(x) = C(n,s) PV ∫ (u(x) - u(y)) / |x - y|^{n+2s} dy`

use crate::error::{Error, Result};
use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

/// Fractional order `s`, kept in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize)]
pub struct FracOrder(f64);

impl FracOrder {
    /// Any order in the open interval `(0, 1)`.
    pub fn new(s: f64) -> Result<Self> {
        if s.is_finite() && s > 0.0 && s < 1.0 {
            Ok(Self(s))
        } else {
            Err(Error::Domain(format!("fractional order s={s} must lie in (0,1)")))
        }
    }

    /// Orders usable by the interface pipeline, `1/2 < s < 1`.
    pub fn pipeline(s: f64) -> Result<Self> {
        if s.is_finite() && s > 0.5 && s < 1.0 {
            Ok(Self(s))
        } else {
            Err(Error::Domain(format!("fractional order s={s} must lie in (1/2,1)")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NormalizationConstant {
    pub n: u32,
    pub s: f64,
    pub value: f64,
}

/// `2^{2s} s (1-s) Γ((n+2s)/2) / (Γ(2-s) π^{n/2})`.
pub fn normalization_constant(n: u32, s: f64) -> Result<NormalizationConstant> {
    let order = FracOrder::new(s)?;
    if n < 1 {
        return Err(Error::Domain("dimension n must be at least 1".into()));
    }
    let s = order.get();
    let nf = n as f64;
    let log_value = 2.0 * s * std::f64::consts::LN_2 + s.ln() + (1.0 - s).ln()
        + ln_gamma((nf + 2.0 * s) / 2.0)
        - ln_gamma(2.0 - s)
        - 0.5 * nf * PI.ln();
    Ok(NormalizationConstant { n, s, value: log_value.exp() })
}

/// Shorthand returning only the value; panics on invalid input.
pub fn c_ns(n: u32, s: f64) -> f64 {
    normalization_constant(n, s).expect("valid (n,s)").value
}

/// The same constant through `2^{2s} s Γ((n+2s)/2) / (Γ(1-s) π^{n/2})`.
pub fn normalization_constant_alt(n: u32, s: f64) -> Result<f64> {
    FracOrder::new(s)?;
    let nf = n as f64;
    Ok(4f64.powf(s) * s * gamma((nf + 2.0 * s) / 2.0) / (gamma(1.0 - s) * PI.powf(nf / 2.0)))
}

/// `1 - C(3,s)^2 / (C(1,s) C(5,s))`, which equals `2/(3+2s)`.
pub fn gamma_ratio_identity(s: f64) -> Result<f64> {
    let c1 = normalization_constant(1, s)?.value;
    let c3 = normalization_constant(3, s)?.value;
    let c5 = normalization_constant(5, s)?.value;
    Ok(1.0 - c3 * c3 / (c1 * c5))
}

/// Closed-form value of `∫_{R^2} |(y,ζ)|^{-3-2s} dy`.
pub fn plain_kernel_closed_form(zeta: f64, s: f64) -> f64 {
    c_ns(1, s) / c_ns(3, s) * zeta.abs().powf(-1.0 - 2.0 * s)
}

/// Closed-form value of `∫_{R^2} y_i^2 |(y,ζ)|^{-5-2s} dy`.
pub fn quadratic_kernel_closed_form(zeta: f64, s: f64) -> f64 {
    plain_kernel_closed_form(zeta, s) / (3.0 + 2.0 * s)
}
