//! Smooth cut-off functions.

/// Smooth (C^∞) step on `[0, 1]`: `1/(1 + e^u)` with `u = 1/t - 1/(1-t)`,
/// flat to all orders at both ends.
fn step(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let r = 1.0 - t;
    let u = 1.0 / t - 1.0 / r;
    if u > 700.0 {
        return (0.0, 0.0, 0.0);
    }
    if u < -700.0 {
        return (1.0, 0.0, 0.0);
    }
    let v = 1.0 / (1.0 + u.exp());
    let du = -1.0 / (t * t) - 1.0 / (r * r);
    let ddu = 2.0 / (t * t * t) - 2.0 / (r * r * r);
    let q = v * (1.0 - v);
    let d1 = -q * du;
    let d2 = -(1.0 - 2.0 * v) * d1 * du - q * ddu;
    (v, d1, d2)
}

/// The pair `η` (1 on `(-∞,1]`, 0 on `[2,∞)`) and `χ` (0 on `(-∞,0]`,
/// 1 on `[1,∞)`).
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct CutoffPair;

impl CutoffPair {
    pub fn chi(&self, t: f64) -> f64 {
        step(t).0
    }

    /// `(χ, χ', χ'')`
    pub fn chi3(&self, t: f64) -> (f64, f64, f64) {
        step(t)
    }

    pub fn eta(&self, t: f64) -> f64 {
        1.0 - step(t - 1.0).0
    }

    /// `(η, η', η'')`
    pub fn eta3(&self, t: f64) -> (f64, f64, f64) {
        let (v, d1, d2) = step(t - 1.0);
        (1.0 - v, -d1, -d2)
    }

    /// Even weight supported in `|z| ≤ 2 R`, equal to 1 on `|z| ≤ R`.
    pub fn zeta(&self, z: f64, half_width: f64) -> f64 {
        self.eta(z.abs() / half_width)
    }
}
