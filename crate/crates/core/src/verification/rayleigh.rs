//! Rayleigh quotient of the linearized operator `(-Δ)^s + 3u² - 1` on
//! localized test functions.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::energy::{pair_monte_carlo, Field3d, McOptions, PairDomain, SampleRegion};
use crate::constants::c_ns;
use crate::cutoff::CutoffPair;
use crate::error::{Error, Result};
use crate::geometry::ApproxSolutionSpec;
use crate::layer::LayerProfile;
use crate::pv::{frac_laplacian_1d, FnField, QuadratureScheme};
use crate::quad::{gl8, pairwise_sum};

/// A test function with bounded support.
pub trait TestFunction: Sync {
    fn value(&self, x: [f64; 3]) -> f64;
    /// Region containing the support.
    fn support(&self) -> SampleRegion;
    /// Parameters reported alongside the quotient.
    fn params(&self) -> Vec<f64>;
}

fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        let v = 1.0 - t * t;
        v * v * v
    }
}

/// `w'(z) η(|z|/Z) b((σ/ε - c)/L)` around the neck of `u*`, with `σ` the
/// meridian parameter of the foot point, signed by the side of the waist
/// plane, and `b(t) = (1 - t²)³`.
#[derive(Debug, Clone)]
pub struct NeckBump<'a> {
    pub spec: &'a ApproxSolutionSpec,
    /// rescaled center along the meridian
    pub center: f64,
    /// rescaled half length along the meridian
    pub half_length: f64,
    /// transverse cut-off scale `Z`
    pub z_cut: f64,
}

impl<'a> NeckBump<'a> {
    pub fn new(spec: &'a ApproxSolutionSpec, center: f64, half_length: f64, z_cut: f64) -> Result<Self> {
        if !(half_length > 0.0 && z_cut > 0.0) {
            return Err(Error::Domain("bump lengths must be positive".into()));
        }
        Ok(Self { spec, center, half_length, z_cut })
    }
}

impl TestFunction for NeckBump<'_> {
    fn value(&self, x: [f64; 3]) -> f64 {
        let own = if x[2] >= 0.0 { x } else { [x[0], x[1], -x[2]] };
        let fp = self.spec.chart.project(own);
        let cut = CutoffPair.eta(fp.z.abs() / self.z_cut);
        if cut == 0.0 {
            return 0.0;
        }
        let sigma = if x[2] >= 0.0 { fp.theta } else { -fp.theta };
        let b = bump((sigma / self.spec.eps() - self.center) / self.half_length);
        if b == 0.0 {
            return 0.0;
        }
        self.spec.profile.derivative(fp.z) * cut * b
    }

    fn support(&self) -> SampleRegion {
        let e = self.spec.eps();
        let m = self.spec.chart.meridian();
        let (a, b) = (e * (self.center - self.half_length), e * (self.center + self.half_length));
        let pad = 2.0 * self.z_cut;
        let ends = [m.eval(a), m.eval(b)];
        let r_min = if a <= 0.0 && b >= 0.0 { m.eval(0.0).r } else { ends[0].r.min(ends[1].r) };
        let r_max = ends[0].r.max(ends[1].r);
        let h = ends[0].x3.abs().max(ends[1].x3.abs());
        SampleRegion::Shell { inner: (r_min / e - pad).max(0.0), outer: r_max / e + pad, half_height: h / e + pad }
    }

    fn params(&self) -> Vec<f64> {
        vec![self.center, self.half_length, self.z_cut]
    }
}

/// `w'(x3) η(|x3|/Z) η(|x'|/L)` across the flat layer.
#[derive(Debug, Clone)]
pub struct LayerBump {
    pub profile: Arc<LayerProfile>,
    pub z_cut: f64,
    pub lateral: f64,
}

impl TestFunction for LayerBump {
    fn value(&self, x: [f64; 3]) -> f64 {
        let c = CutoffPair;
        self.profile.derivative(x[2]) * c.eta(x[2].abs() / self.z_cut) * c.eta(x[0].hypot(x[1]) / self.lateral)
    }

    fn support(&self) -> SampleRegion {
        SampleRegion::Shell { inner: 0.0, outer: 2.0 * self.lateral, half_height: 2.0 * self.z_cut }
    }

    fn params(&self) -> Vec<f64> {
        vec![self.z_cut, self.lateral]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayleighOptions {
    pub mc: McOptions,
}

impl Default for RayleighOptions {
    fn default() -> Self {
        Self { mc: McOptions { samples: 200_000, ..McOptions::default() } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayleighSample {
    pub params: Vec<f64>,
    pub quotient: f64,
    pub se: f64,
    pub norm_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayleighReport {
    pub samples: Vec<RayleighSample>,
    pub min_quotient: f64,
    pub argmin: Vec<f64>,
    /// standard error of the minimum
    pub se: f64,
    /// the minimum lies more than two standard errors below zero
    pub certified_negative: bool,
}

/// `Q(φ)/‖φ‖²` with
/// `Q(φ) = C(3,s)/2 ∬ (φ(x)-φ(y))² |x-y|^{-3-2s} + ∫ (3u²-1) φ²`.
pub fn rayleigh_quotient(u: &dyn Field3d, s: f64, phi: &dyn TestFunction, opts: &RayleighOptions) -> Result<RayleighSample> {
    let region = phi.support();
    let c = 0.5 * c_ns(3, s);
    let pairs = PairDomain::AtLeastOne;
    let est = pair_monte_carlo::<2, _, _>(region, |r| u.interfaces(r), s, &opts.mc, |d| {
        let p0 = phi.value(d.x);
        let mut kin = 0.0;
        for sg in [1.0, -1.0] {
            let y = [d.x[0] + sg * d.h[0], d.x[1] + sg * d.h[1], d.x[2] + sg * d.h[2]];
            let inside = region.contains(y);
            let p1 = if inside { phi.value(y) } else { 0.0 };
            let dp = p0 - p1;
            kin += 0.5 * pairs_weight(pairs, inside) * dp * dp;
        }
        let potential = if p0 == 0.0 {
            0.0
        } else {
            let v = u.value(d.x);
            (3.0 * v * v - 1.0) * p0 * p0
        };
        [c * kin * d.kernel + potential, p0 * p0]
    });
    let (n, dn) = (est.value[0], est.value[1]);
    if !(dn > 0.0) {
        return Err(Error::Quadrature("test function vanished on every sample".into()));
    }
    let q = n / dn;
    let var = (est.cov[0][0] - 2.0 * q * est.cov[0][1] + q * q * est.cov[1][1]) / (dn * dn);
    Ok(RayleighSample { params: phi.params(), quotient: q, se: var.max(0.0).sqrt(), norm_sq: dn })
}

fn pairs_weight(p: PairDomain, inside: bool) -> f64 {
    match (p, inside) {
        (_, true) => 1.0,
        (PairDomain::AtLeastOne, false) => 2.0,
        (PairDomain::BothInside, false) => 0.0,
    }
}

/// Smallest quotient over a family of test functions.
pub fn rayleigh_probe(
    u: &dyn Field3d,
    s: f64,
    family: &[&dyn TestFunction],
    opts: &RayleighOptions,
) -> Result<RayleighReport> {
    if family.is_empty() {
        return Err(Error::Domain("empty test family".into()));
    }
    let samples = family.iter().map(|phi| rayleigh_quotient(u, s, *phi, opts)).collect::<Result<Vec<_>>>()?;
    let best = samples.iter().min_by(|a, b| a.quotient.total_cmp(&b.quotient)).expect("non-empty family");
    Ok(RayleighReport {
        min_quotient: best.quotient,
        argmin: best.params.clone(),
        se: best.se,
        certified_negative: best.quotient + 2.0 * best.se < 0.0,
        samples: samples.clone(),
    })
}

/// Quotient of the one-dimensional linearization `(-∂²)^s + 3w² - 1` at
/// `φ = w' η(|z|/Z)`, by deterministic quadrature. Tends to zero as `Z`
/// grows since `w'` spans its kernel.
pub fn line_quotient(profile: &LayerProfile, z_cut: f64) -> Result<f64> {
    if !(z_cut > 0.0) {
        return Err(Error::Domain("z_cut must be positive".into()));
    }
    let phi = |z: f64| profile.derivative(z) * CutoffPair.eta(z.abs() / z_cut);
    let field = FnField::new(phi);
    let scheme = QuadratureScheme { truncation_radius: 8.0 * z_cut, ..profile.scheme() };
    let mut breaks = vec![-2.0 * z_cut];
    let n = 64;
    for k in 1..=n {
        // denser near the origin, where w' is concentrated
        let t = k as f64 / n as f64;
        breaks.push(-2.0 * z_cut + 4.0 * z_cut * (0.5 - 0.5 * (std::f64::consts::PI * t).cos()));
    }
    let nodes: Vec<(f64, f64)> = breaks.windows(2).flat_map(|w| gl8().mapped(w[0], w[1]).collect::<Vec<_>>()).collect();
    let terms = nodes
        .par_iter()
        .map(|&(z, wt)| {
            let l = frac_laplacian_1d(&field, z, profile.order(), &scheme)?;
            let w = profile.w(z);
            let p = phi(z);
            Ok((wt * p * (l + (3.0 * w * w - 1.0) * p), wt * p * p))
        })
        .collect::<Result<Vec<_>>>()?;
    let num = pairwise_sum(&terms.iter().map(|t| t.0).collect::<Vec<_>>());
    let den = pairwise_sum(&terms.iter().map(|t| t.1).collect::<Vec<_>>());
    Ok(num / den)
}
