use crate::error::{Error, Result};
use crate::profile::RadialProfile;

/// Weights `(γ, α)` of the radial C²-type norm and its Hölder companion.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeightedNormSpec {
    pub gamma: f64,
    pub alpha: f64,
    pub domain_start: f64,
}

impl WeightedNormSpec {
    pub fn new(s: f64, gamma: f64, alpha: f64, domain_start: f64) -> Result<Self> {
        let cap = 2.0 + (2.0 * s - 1.0) / (2.0 * s + 1.0);
        if !(gamma <= cap) {
            return Err(Error::Config(format!("gamma={gamma} exceeds {cap}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("norm Hölder exponent {alpha} must lie in (0, 1)")));
        }
        Ok(Self { gamma, alpha, domain_start })
    }

    /// `γ = 2`, `α = 1/2`.
    pub fn standard(domain_start: f64) -> Self {
        Self { gamma: 2.0, alpha: 0.5, domain_start }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum NormKind {
    /// sup of `r^{γ-2}|φ|`, `r^{γ-1}|φ'|`, `r^γ|φ''|` plus the Hölder term on `φ''`
    Star,
    /// sup of `r^γ|h|` plus the Hölder term on `h`
    StarStar,
}

/// Individual terms of a weighted norm; `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NormBreakdown {
    pub value: f64,
    pub slope: f64,
    pub curvature: f64,
    pub holder: f64,
    pub total: f64,
}

/// Hölder quotients `min(r,ρ)^{γ+α}|u(r)-u(ρ)|/|r-ρ|^α` over node pairs
/// `(i, i+2^k)` with `|r-ρ| ≤ 1`.
fn holder_term(p: &RadialProfile, spec: &WeightedNormSpec, second: bool) -> f64 {
    let u = if second { &p.d2f } else { &p.f };
    let n = p.len();
    let mut best = 0.0f64;
    for i in 0..n - 1 {
        let r = p.grid[i];
        if r < spec.domain_start {
            continue;
        }
        let weight = r.powf(spec.gamma + spec.alpha);
        let mut k = 1;
        while i + k < n {
            let d = p.grid[i + k] - r;
            if d > 1.0 {
                break;
            }
            best = best.max(weight * (u[i + k] - u[i]).abs() / d.powf(spec.alpha));
            k *= 2;
        }
    }
    best
}

pub fn weighted_norm_terms(p: &RadialProfile, spec: &WeightedNormSpec, kind: NormKind) -> NormBreakdown {
    let g = spec.gamma;
    let (mut a, mut b, mut c) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..p.len() {
        let r = p.grid[i];
        if r < spec.domain_start {
            continue;
        }
        match kind {
            NormKind::Star => {
                a = a.max(r.powf(g - 2.0) * p.f[i].abs());
                b = b.max(r.powf(g - 1.0) * p.df[i].abs());
                c = c.max(r.powf(g) * p.d2f[i].abs());
            }
            NormKind::StarStar => a = a.max(r.powf(g) * p.f[i].abs()),
        }
    }
    let hold = holder_term(p, spec, kind == NormKind::Star);
    NormBreakdown { value: a, slope: b, curvature: c, holder: hold, total: a + b + c + hold }
}

/// `‖φ‖_*` or `‖h‖_**`.
pub fn weighted_norms(p: &RadialProfile, spec: &WeightedNormSpec, kind: NormKind) -> f64 {
    weighted_norm_terms(p, spec, kind).total
}

pub fn norm_star(p: &RadialProfile, spec: &WeightedNormSpec) -> f64 {
    weighted_norms(p, spec, NormKind::Star)
}

pub fn norm_star_star(p: &RadialProfile, spec: &WeightedNormSpec) -> f64 {
    weighted_norms(p, spec, NormKind::StarStar)
}
