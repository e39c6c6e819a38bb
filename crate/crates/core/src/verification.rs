//! Desk-scale audits of the approximate solution: the error expansion in
//! Fermi coordinates, the decay away from the interface, the localized
//! energy and a second-variation probe.

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::c_ns;
use crate::error::{Error, Result};
use crate::geometry::{ApproxSolutionSpec, FermiChart, TangentChart};
use crate::layer::{c_h_anywhere, interaction_term, line_operator, LayerProfile};
use crate::quad::{gl8, loglog_slope, pairwise_sum};

mod energy;
mod rayleigh;

pub use energy::{double_well, energy_at, energy_growth, ConstantField, EnergyOptions, EnergyReport, Field3d, FlatLayer, McOptions, PairDomain, SampleRegion};
pub use rayleigh::{line_quotient, rayleigh_probe, rayleigh_quotient, LayerBump, NeckBump, RayleighOptions, RayleighReport, RayleighSample, TestFunction};

/// How large the quadrature window around a sample point is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowPolicy {
    /// multiplies `R1(|x'|)`
    pub factor: f64,
    /// the half-width is at least `cover·|z0|`
    pub cover: f64,
    /// angular nodes on `[0, π]` (the chart is symmetric under `y2 ↦ -y2`)
    pub angles: usize,
    /// innermost panel edge around the singular point
    pub finest: f64,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        Self { factor: 1.0, cover: 1.5, angles: 16, finest: 1e-7 }
    }
}

/// `(-Δ)^s w(z)` of one leaf at `Φ(0, z0)`, split as the curved correction
/// inside the window `|y| < R_y`, `|z| < R_z` plus the flat layer over the
/// window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeafOperator {
    /// `C(3,s) ∫_window (w(z0) - w(z)) [K J - K_flat]`
    pub curved: f64,
    /// flat layer restricted to the window
    pub window_flat: f64,
    /// flat layer over all of space, `(-∂_zz)^s w(z0)`
    pub line: f64,
    /// `(R_y, R_z)`
    pub radius: (f64, f64),
    pub z0: f64,
}

impl LeafOperator {
    /// Window-only value of the operator.
    pub fn windowed(&self) -> f64 {
        self.curved + self.window_flat
    }

    /// Flat-layer part outside the window.
    pub fn exterior_flat(&self) -> f64 {
        self.line - self.window_flat
    }
}

/// `first, first·2, …` up to `b`, measured from `a` in the direction of
/// `b`.
fn geometric(a: f64, b: f64, first: f64) -> Vec<f64> {
    let span = (b - a).abs();
    let sg = (b - a).signum();
    let mut v = Vec::new();
    let mut h = first;
    while h < span {
        v.push(a + sg * h);
        h *= 2.0;
    }
    v.push(b);
    v
}

fn panels(breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let rule = gl8();
    let mut x = Vec::new();
    let mut w = Vec::new();
    for p in breaks.windows(2) {
        for (xi, wi) in rule.mapped(p[0], p[1]) {
            x.push(xi);
            w.push(wi);
        }
    }
    (x, w)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + a.abs()));
    v
}

/// Normal-direction breakpoints on `[-R, R]`: graded toward `z0` and
/// around the layer centre.
fn normal_breaks(z0: f64, radius: f64, finest: f64) -> Vec<f64> {
    let mut b = vec![-radius, radius, z0, 0.0];
    b.extend(geometric(z0, radius, finest));
    b.extend(geometric(z0, -radius, finest));
    b.extend(geometric(0.0, radius, 0.125));
    b.extend(geometric(0.0, -radius, 0.125));
    sorted(b.into_iter().filter(|x| x.abs() <= radius).collect())
}

/// Windowed value of `(-Δ)^s w(z)` for one leaf at the point with Fermi
/// coordinates `(θ0, φ = 0, z0)`, over the cylinder `|y| < R_y`,
/// `|z| < R_z`.
pub fn leaf_operator(
    chart: &FermiChart,
    profile: &LayerProfile,
    theta0: f64,
    z0: f64,
    radius: (f64, f64),
    policy: &WindowPolicy,
) -> Result<LeafOperator> {
    let (ry, rz) = radius;
    if !(rz > z0.abs() && ry > 0.0) {
        return Err(Error::Domain(format!("window {radius:?} does not contain z0={z0}")));
    }
    let s = profile.s;
    let p = 3.0 + 2.0 * s;
    let tc = TangentChart::new(chart, theta0);
    let w0 = profile.w(z0);

    let (zs, zw) = panels(&normal_breaks(z0, rz, policy.finest));
    let jump: Vec<f64> = zs.iter().map(|&z| w0 - profile.w(z)).collect();
    let (rs, rw) = panels(&geometric(0.0, ry, policy.finest));
    let m = policy.angles.max(2);
    let nodes: Vec<(usize, usize)> = (0..rs.len()).flat_map(|i| (0..=m).map(move |j| (i, j))).collect();

    let rows: Vec<Result<f64>> = nodes
        .par_iter()
        .map(|&(i, j)| {
            let rho = rs[i];
            let psi = std::f64::consts::PI * j as f64 / m as f64;
            let wpsi = if j == 0 || j == m { 1.0 } else { 2.0 } * std::f64::consts::PI / m as f64;
            let cs = tc.local([rho * psi.cos(), rho * psi.sin()])?;
            let mut acc = Vec::with_capacity(zs.len());
            for (k, &z) in zs.iter().enumerate() {
                let d = cs.separation(z, z0);
                let vol = cs.volume(z);
                if !(vol > 0.0) {
                    return Err(Error::Degenerate(format!("volume factor {vol} at z={z}")));
                }
                let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                let t = z0 - z;
                let flat = (rho * rho + t * t).powf(-0.5 * p);
                acc.push(jump[k] * (d2.powf(-0.5 * p) * vol - flat) * zw[k]);
            }
            Ok(pairwise_sum(&acc) * rho * rw[i] * wpsi)
        })
        .collect();
    let mut vals = Vec::with_capacity(rows.len());
    for r in rows {
        vals.push(r?);
    }
    let curved = c_ns(3, s) * pairwise_sum(&vals);

    let line = line_operator(profile, z0)?;
    let ext = flat_exterior(profile, z0, radius);
    Ok(LeafOperator { curved, window_flat: line - ext, line, radius, z0 })
}

/// Flat layer outside the cylinder `|y| < R_y`, `|z| < R_z`:
/// `C(1,s)[∫_{|z|>R_z} (w0 - w)|z0 - z|^{-1-2s} + ∫_{|z|<R_z} (w0 - w)(R_y² + (z0-z)²)^{-(1+2s)/2}]`.
pub fn flat_exterior(profile: &LayerProfile, z0: f64, radius: (f64, f64)) -> f64 {
    let (ry, radius) = radius;
    let s = profile.s;
    let s2 = 2.0 * s;
    let w0 = profile.w(z0);
    let rule = gl8();
    // z = R v^{-1/(2s)} maps (0, 1] onto [R, ∞) with a bounded integrand
    let mut tails = Vec::new();
    for sg in [1.0, -1.0] {
        let n = 64;
        for k in 0..n {
            let (a, b) = (k as f64 / n as f64, (k + 1) as f64 / n as f64);
            tails.push(rule.integrate(a, b, |v| {
                let z = radius * v.powf(-1.0 / s2);
                let dz = radius / s2 * v.powf(-1.0 / s2 - 1.0);
                (w0 - profile.w(sg * z)) * (sg * z - z0).abs().powf(-1.0 - s2) * dz
            }));
        }
    }
    let mut b = vec![-radius, radius, z0];
    b.extend(geometric(0.0, radius, 0.125));
    b.extend(geometric(0.0, -radius, 0.125));
    let b = sorted(b.into_iter().filter(|x| x.abs() <= radius).collect());
    let r2 = ry * ry;
    for p in b.windows(2) {
        tails.push(rule.integrate(p[0], p[1], |z| {
            let t = z0 - z;
            (w0 - profile.w(z)) * (r2 + t * t).powf(-0.5 - s)
        }));
    }
    c_ns(1, s) * pairwise_sum(&tails)
}

/// Majorant of the exterior contribution for a field with oscillation 2.
fn exterior_majorant(s: f64, z0: f64, radius: (f64, f64)) -> f64 {
    let s2 = 2.0 * s;
    let (ry, rz) = radius;
    2.0 * c_ns(1, s) * 2.0 * ((rz - z0.abs()).powf(-s2) / s + 2.0 * rz * ry.powf(-1.0 - s2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    /// one leaf, `|x'| ≤ 2R̄/ε` side of the switch
    Near,
    /// two leaves, `R̄/ε < |x'| < 4R̄/ε`
    Intermediate,
    /// two leaves, `|x'| ≥ 4R̄/ε`
    Far,
    /// the window straddles the switch between one and two leaves
    Transition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleLocation {
    /// rescaled `|x'|`
    pub r: f64,
    pub x3: f64,
    /// signed distance to the leaf on the same side
    pub z: f64,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSample {
    pub location: SampleLocation,
    /// `(-Δ)^s u* + u*³ - u*` with the operator taken over the window
    #[serde(rename = "S_value")]
    pub s_value: f64,
    pub predicted: f64,
    pub remainder: f64,
    pub predicted_order: f64,
    pub window_radius: f64,
    /// flat-layer part outside the windows, summed over the leaves
    pub exterior_flat: f64,
    /// analytic majorant of the exterior part
    pub exterior_bound: f64,
    /// set when the point could not be audited
    pub flag: Option<String>,
}

impl ErrorSample {
    /// Remainder once the flat-layer exterior is added back.
    pub fn closed_remainder(&self) -> f64 {
        self.remainder + self.exterior_flat
    }

    fn flagged(location: SampleLocation, order: f64, msg: String) -> Self {
        Self {
            location,
            s_value: f64::NAN,
            predicted: f64::NAN,
            remainder: f64::NAN,
            predicted_order: order,
            window_radius: f64::NAN,
            exterior_flat: f64::NAN,
            exterior_bound: f64::NAN,
            flag: Some(msg),
        }
    }
}

fn mean_curvature(chart: &FermiChart, theta: f64) -> f64 {
    let (k1, k2) = chart.kappas(theta);
    0.5 * (k1 + k2)
}

fn audit_point(spec: &ApproxSolutionSpec, x: [f64; 3], policy: &WindowPolicy) -> ErrorSample {
    let e = spec.eps();
    let s = spec.profile.s;
    let w = spec.profile.as_ref();
    let rho = x[0].hypot(x[1]);
    let rb = spec.r_bar / e;
    let upper = &spec.chart;
    let lower = upper.mirror();
    let own = if x[2] >= 0.0 { upper.clone() } else { lower.clone() };
    let fp = own.project(x);
    let r1 = spec.r1(rho);
    let ry = policy.factor * r1;
    let window = |z: f64| (ry, ry.max(policy.cover * z.abs()));
    let two_leaf = rho - ry >= rb + 1.0;
    let region = if rho + ry <= rb {
        Region::Near
    } else if !two_leaf {
        Region::Transition
    } else if rho >= 4.0 * rb {
        Region::Far
    } else {
        Region::Intermediate
    };
    let order = match region {
        Region::Far => spec.chart.leaf_height(rho).map_or(f64::NAN, |f| f.powf(-2.0 * s * spec.tau)),
        _ => e.powf(2.0 * s),
    };
    let location = SampleLocation { r: rho, x3: x[2], z: fp.z, region };
    if fp.z.abs() > r1 {
        return ErrorSample::flagged(location, order, format!("|z|={} exceeds R1={r1}", fp.z.abs()));
    }
    if region == Region::Transition {
        return ErrorSample::flagged(location, order, "window straddles the one/two-leaf switch".into());
    }
    let run = || -> Result<ErrorSample> {
        let u = spec.eval(x);
        let mut ops = Vec::new();
        let (model, predicted) = if region == Region::Near {
            ops.push(leaf_operator(&own, w, fp.theta, fp.z, window(fp.z), policy)?);
            (w.w(fp.z), c_h_anywhere(fp.z, w)? * mean_curvature(&own, fp.theta))
        } else {
            let pp = upper.project(x);
            let pm = lower.project(x);
            let mut pred = interaction_term(w.w(pp.z), w.w(pm.z));
            for (c, f) in [(upper, &pp), (&lower, &pm)] {
                ops.push(leaf_operator(c, w, f.theta, f.z, window(f.z), policy)?);
                pred += c_h_anywhere(f.z, w)? * mean_curvature(c, f.theta);
            }
            (w.w(pp.z) + w.w(pm.z) + 1.0, pred)
        };
        let mut flag = None;
        if (model - u).abs() > 1e-9 {
            flag = Some(format!("u* = {u} differs from the window model {model}"));
        }
        let lap: f64 = ops.iter().map(|o| o.windowed()).sum();
        let s_value = lap + u * u * u - u;
        Ok(ErrorSample {
            location,
            s_value,
            predicted,
            remainder: s_value - predicted,
            predicted_order: order,
            window_radius: ry,
            exterior_flat: ops.iter().map(|o| o.exterior_flat()).sum(),
            exterior_bound: ops.iter().map(|o| exterior_majorant(s, o.z0, o.radius)).sum(),
            flag,
        })
    };
    run().unwrap_or_else(|err| ErrorSample::flagged(location, order, err.to_string()))
}

/// `S(u*)` at each point by windowed quadrature in Fermi coordinates,
/// compared with the regional prediction. Points that cannot be audited
/// come back flagged.
pub fn audit_error(spec: &ApproxSolutionSpec, points: &[[f64; 3]], policy: &WindowPolicy) -> Vec<ErrorSample> {
    points.par_iter().map(|&x| audit_point(spec, x, policy)).collect()
}

/// Point at rescaled radius `rho` on the upper leaf, moved `z` along the
/// normal.
pub fn point_at(chart: &FermiChart, rho: f64, z: f64) -> [f64; 3] {
    let t = chart.meridian().param_of_radius(chart.eps * rho);
    chart.map(t, 0.0, z)
}

/// Points `(ρ, 0, 0)` on the midplane.
pub fn midplane_point(rho: f64) -> [f64; 3] {
    [rho, 0.0, 0.0]
}

/// The field whose fractional Laplacian is measured off the interface.
#[derive(Debug, Clone, Copy)]
pub enum DecayField<'a> {
    Approx(&'a ApproxSolutionSpec),
    /// `(-Δ)^s` of a constant vanishes identically
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FarDecay {
    pub radii: Vec<f64>,
    pub heights: Vec<f64>,
    /// window-only `(-Δ)^s u*`
    pub values: Vec<f64>,
    /// with the flat-layer exterior added
    pub closed_values: Vec<f64>,
    /// decay exponent of `|values|` in `r`, if the values are nonzero
    pub exponent: Option<f64>,
    pub closed_exponent: Option<f64>,
}

/// Fits the decay of `|(-Δ)^s u*|` at `z0 = c r^{2/(2s+1)}` above the upper
/// leaf.
pub fn audit_far_decay(field: DecayField<'_>, radii: &[f64], c: f64, policy: &WindowPolicy) -> Result<FarDecay> {
    if radii.len() < 2 {
        return Err(Error::Domain("need at least two radii".into()));
    }
    let spec = match field {
        DecayField::Constant(_) => {
            let zero = vec![0.0; radii.len()];
            return Ok(FarDecay {
                radii: radii.to_vec(),
                heights: vec![f64::NAN; radii.len()],
                values: zero.clone(),
                closed_values: zero,
                exponent: None,
                closed_exponent: None,
            });
        }
        DecayField::Approx(spec) => spec,
    };
    let s = spec.profile.s;
    let beta = 2.0 / (2.0 * s + 1.0);
    let upper = &spec.chart;
    let lower = upper.mirror();
    let w = spec.profile.as_ref();
    let rows: Vec<Result<(f64, f64, f64)>> = radii
        .par_iter()
        .map(|&rho| {
            let z0 = c * rho.powf(beta);
            let x = point_at(upper, rho, z0);
            let r1 = spec.r1(rho);
            let mut win = 0.0;
            let mut closed = 0.0;
            for ch in [upper, &lower] {
                let f = ch.project(x);
                let ry = policy.factor * r1;
                let op = leaf_operator(ch, w, f.theta, f.z, (ry, ry.max(policy.cover * f.z.abs())), policy)?;
                win += op.windowed();
                closed += op.curved + op.line;
            }
            Ok((z0, win, closed))
        })
        .collect();
    let mut out = FarDecay {
        radii: radii.to_vec(),
        heights: Vec::new(),
        values: Vec::new(),
        closed_values: Vec::new(),
        exponent: None,
        closed_exponent: None,
    };
    for r in rows {
        let (z0, a, b) = r?;
        out.heights.push(z0);
        out.values.push(a);
        out.closed_values.push(b);
    }
    let fit = |v: &[f64]| {
        let a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        a.iter().all(|&x| x > 0.0).then(|| -loglog_slope(radii, &a).0)
    };
    out.exponent = fit(&out.values);
    out.closed_exponent = fit(&out.closed_values);
    Ok(out)
}

/// Log-log slope of `|remainder|` against `x` over the given samples.
pub fn remainder_slope(x: &[f64], samples: &[ErrorSample], closed: bool) -> f64 {
    let y: Vec<f64> = samples
        .iter()
        .map(|e| if closed { e.closed_remainder() } else { e.remainder }.abs())
        .collect();
    loglog_slope(x, &y).0
}
