//! The reduced equation for the interface profile: initial approximation,
//! Emden–Fowler asymptotics, the linearized operator with its kernels and
//! right inverse, and the fixed-point solve.

mod emden;
mod initial;
mod linear;
mod norms;
mod solve;

pub use emden::*;
pub use initial::*;
pub use linear::*;
pub use norms::*;
pub use solve::*;

use crate::error::{Error, Result};

/// Growth exponent `β = 2/(2s+1)` of the far field.
pub fn growth_exponent(s: f64) -> f64 {
    2.0 / (2.0 * s + 1.0)
}

/// Largest `ε` accepted by default.
pub const EPS_MAX: f64 = 1e-2;
/// Largest `ε` accepted on request.
pub const EPS_COARSE: f64 = 2e-2;

/// Length scales of the construction for given `(s, ε, δ0)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Scales {
    pub s: f64,
    pub eps: f64,
    pub delta0: f64,
    /// `|log ε|`
    pub log_eps: f64,
    /// `r_ε = (|log ε|/ε)^{(2s-1)/2}`
    pub r_eps: f64,
    /// `|log ε| r_ε`, the unit of the rescaled variable
    pub unit: f64,
    /// `δ0 |log ε| r_ε`
    pub tilde_r_eps: f64,
}

impl Scales {
    pub fn new(s: f64, eps: f64, delta0: f64) -> Result<Self> {
        Self::with_limit(s, eps, delta0, EPS_MAX)
    }

    /// Same as [`Scales::new`] with a different upper bound on `ε`. Coarse
    /// values up to `EPS_COARSE` serve the error-order sweeps.
    pub fn with_limit(s: f64, eps: f64, delta0: f64, eps_max: f64) -> Result<Self> {
        crate::constants::FracOrder::pipeline(s)?;
        if !(eps_max <= EPS_COARSE) {
            return Err(Error::Domain(format!("eps bound {eps_max} exceeds {EPS_COARSE}")));
        }
        if !(eps > 0.0 && eps <= eps_max) {
            return Err(Error::Domain(format!("eps={eps} must lie in (0, {eps_max:e}]")));
        }
        let log_eps = -eps.ln();
        let r_eps = (log_eps / eps).powf((2.0 * s - 1.0) / 2.0);
        let unit = log_eps * r_eps;
        let tilde = delta0 * unit;
        if !(tilde >= r_eps + 1.0) {
            return Err(Error::Domain(format!(
                "delta0={delta0} too small: need delta0 |log eps| r_eps >= r_eps + 1 (r_eps={r_eps:.3})"
            )));
        }
        Ok(Self { s, eps, delta0, log_eps, r_eps, unit, tilde_r_eps: tilde })
    }

    /// `ε^{2s-1}`
    pub fn eps_pow(&self) -> f64 {
        self.eps.powf(2.0 * self.s - 1.0)
    }
}

/// Log-spaced grid on `[a, b]` with `per_efold` nodes per unit of `log r`,
/// with extra nodes merged in.
pub fn log_grid(a: f64, b: f64, per_efold: usize, extra: &[f64]) -> Vec<f64> {
    let n = (((b / a).ln() * per_efold as f64).ceil() as usize).max(8);
    let mut g: Vec<f64> = (0..=n).map(|i| a * ((b / a).ln() * i as f64 / n as f64).exp()).collect();
    *g.last_mut().unwrap() = b;
    for &e in extra {
        if e > a && e < b {
            g.push(e);
        }
    }
    g.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // drop nodes that crowd an inserted one
    let mut out: Vec<f64> = Vec::with_capacity(g.len());
    for x in g {
        if let Some(&last) = out.last() {
            let gap: f64 = x - last;
            if gap < 1e-3 * (x / per_efold as f64) {
                if extra.contains(&x) {
                    out.pop();
                } else {
                    continue;
                }
            }
        }
        out.push(x);
    }
    out
}
