//! Geometry of rotationally symmetric interfaces: curvatures, Fermi
//! coordinates around one leaf, the volume Jacobian, tangent-graph charts
//! and the assembled approximate solution `u*`.
//!
//! Charts store the generating curve in unscaled variables. Points handed
//! to a chart live in the rescaled space `x = X/ε`.

use std::fmt::Debug;
use std::sync::Arc;

use crate::cutoff::CutoffPair;
use crate::error::{Error, Result};
use crate::layer::LayerProfile;
use crate::profile::{NeckProfile, Radial, RadialProfile};
use crate::quad::gl8;
use crate::reduced::ReducedSolution;

/// Principal curvatures of a surface of revolution at one point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CurvatureData {
    /// along the meridian
    pub kappa1: f64,
    /// along the parallel
    pub kappa2: f64,
    #[serde(rename = "H")]
    pub h: f64,
    /// sup of `|κ_i(r) - κ_i(ρ)|/|r - ρ|^α` over `|r - ρ| ≤ 1`
    pub holder_bound: f64,
}

fn graph_kappas(r: f64, d: f64, dd: f64) -> (f64, f64) {
    let w2 = 1.0 + d * d;
    let w = w2.sqrt();
    (dd / (w2 * w), d / (r * w))
}

/// Curvatures of the graph `x3 = F(|x'|)` at radius `r`, with the Hölder
/// proxy taken for `α = 1/2`.
pub fn curvatures<R: Radial + ?Sized>(f: &R, r: f64) -> Result<CurvatureData> {
    curvatures_with(f, r, 0.5)
}

pub fn curvatures_with<R: Radial + ?Sized>(f: &R, r: f64, alpha: f64) -> Result<CurvatureData> {
    let a = f.start();
    if !(r.is_finite() && r > a && r > 0.0) {
        return Err(Error::Domain(format!("radius {r} is not inside the graph domain (start {a})")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("Hölder exponent {alpha} must lie in (0, 1)")));
    }
    let (_, d, dd) = f.eval3(r);
    if !(d.is_finite() && dd.is_finite()) {
        return Err(Error::Domain(format!("second derivative unavailable at r={r}")));
    }
    let (k1, k2) = graph_kappas(r, d, dd);
    let lo = (r - 1.0).max(a + 1e-9 * (1.0 + a.abs()));
    let mut holder = 0.0f64;
    for i in 0..=32 {
        let q = lo + (r + 1.0 - lo) * i as f64 / 32.0;
        let gap = (q - r).abs();
        if gap < 1e-12 {
            continue;
        }
        let (_, dq, ddq) = f.eval3(q);
        let (m1, m2) = graph_kappas(q, dq, ddq);
        holder = holder.max((m1 - k1).abs().max((m2 - k2).abs()) / gap.powf(alpha));
    }
    Ok(CurvatureData { kappa1: k1, kappa2: k2, h: 0.5 * (k1 + k2), holder_bound: holder })
}

/// `(G'/√(1+G'²))' - 1/(G√(1+G'²))` for the neck parametrization
/// `r = G(z)`; `g` returns `(G, G', G'')`.
pub fn neck_mean_curvature<G: Fn(f64) -> (f64, f64, f64)>(g: G, z: f64) -> Result<f64> {
    let (v, d, dd) = g(z);
    if !(v > 0.0) {
        return Err(Error::Domain(format!("neck radius G({z}) = {v} must be positive")));
    }
    Ok(crate::reduced::neck_mean_curvature(v, d, dd))
}

/// Point of a generating curve `t ↦ (r(t), x3(t))` with two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeridianPoint {
    pub r: f64,
    pub x3: f64,
    pub dr: f64,
    pub dx3: f64,
    pub d2r: f64,
    pub d2x3: f64,
}

impl MeridianPoint {
    pub fn speed(&self) -> f64 {
        self.dr.hypot(self.dx3)
    }

    /// `(ν_r, ν_3) = (-x3', r')/|P'|`
    pub fn normal(&self) -> (f64, f64) {
        let v = self.speed();
        (-self.dx3 / v, self.dr / v)
    }

    pub fn kappa1(&self) -> f64 {
        let v = self.speed();
        (self.dr * self.d2x3 - self.dx3 * self.d2r) / (v * v * v)
    }

    pub fn kappa2(&self) -> f64 {
        if self.dx3 == 0.0 {
            return 0.0;
        }
        self.dx3 / (self.r * self.speed())
    }
}

/// Generating curve of a surface of revolution, parametrized on `t ≥ 0`
/// with `r(t)` non-decreasing.
pub trait Meridian: Send + Sync + Debug {
    fn eval(&self, t: f64) -> MeridianPoint;
    /// Parameter of the point with radius `r`, clamped to `t = 0`.
    fn param_of_radius(&self, r: f64) -> f64;
    /// Parameter up to which curvatures are checked.
    fn sample_end(&self) -> f64;
    /// Height of the graph part at radius `r`, if `r` lies on it.
    fn height(&self, r: f64) -> Option<f64>;
    /// Smallest admissible parameter; curves symmetric about the waist
    /// continue to negative `t` through the lower half.
    fn min_param(&self) -> f64 {
        0.0
    }
    /// Parameters where the second derivative may jump.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `(cosh t, t)`: the upper half of the unit catenoid.
#[derive(Debug, Clone, Copy, Default)]
pub struct CatenoidMeridian;

impl Meridian for CatenoidMeridian {
    fn eval(&self, t: f64) -> MeridianPoint {
        let (c, s) = (t.cosh(), t.sinh());
        MeridianPoint { r: c, x3: t, dr: s, dx3: 1.0, d2r: c, d2x3: 0.0 }
    }

    fn param_of_radius(&self, r: f64) -> f64 {
        r.max(1.0).acosh()
    }

    fn sample_end(&self) -> f64 {
        1e4f64.acosh()
    }

    fn height(&self, r: f64) -> Option<f64> {
        (r >= 1.0).then(|| r.acosh())
    }

    fn min_param(&self) -> f64 {
        f64::NEG_INFINITY
    }
}

/// Horizontal plane `x3 = height`.
#[derive(Debug, Clone, Copy)]
pub struct FlatMeridian {
    pub height: f64,
}

impl Meridian for FlatMeridian {
    fn eval(&self, t: f64) -> MeridianPoint {
        MeridianPoint { r: t, x3: self.height, dr: 1.0, dx3: 0.0, d2r: 0.0, d2x3: 0.0 }
    }

    fn param_of_radius(&self, r: f64) -> f64 {
        r.max(0.0)
    }

    fn sample_end(&self) -> f64 {
        1e4
    }

    fn height(&self, _r: f64) -> Option<f64> {
        Some(self.height)
    }
}

/// Graph `x3 = F(r)` for `r ≥ F.start()`, with `t = r - start`.
#[derive(Debug, Clone)]
pub struct GraphMeridian<R> {
    pub f: R,
}

impl<R: Radial + Debug> Meridian for GraphMeridian<R> {
    fn eval(&self, t: f64) -> MeridianPoint {
        let r = self.f.start() + t;
        let (v, d, dd) = self.f.eval3(r);
        MeridianPoint { r, x3: v, dr: 1.0, dx3: d, d2r: 0.0, d2x3: dd }
    }

    fn param_of_radius(&self, r: f64) -> f64 {
        (r - self.f.start()).max(0.0)
    }

    fn sample_end(&self) -> f64 {
        1e4
    }

    fn height(&self, r: f64) -> Option<f64> {
        (r >= self.f.start()).then(|| self.f.value(r))
    }
}

/// Neck `(G(t), t)` on `[0, z1]` followed by the graph `(r1 + t - z1, F)`.
#[derive(Debug, Clone)]
pub struct ProfileMeridian {
    pub neck: NeckProfile,
    pub graph: RadialProfile,
}

impl ProfileMeridian {
    pub fn new(neck: NeckProfile, graph: RadialProfile) -> Result<Self> {
        if (graph.start() - neck.r1).abs() > 1e-9 {
            return Err(Error::Domain("graph must start where the neck ends".into()));
        }
        Ok(Self { neck, graph })
    }
}

impl Meridian for ProfileMeridian {
    fn eval(&self, t: f64) -> MeridianPoint {
        if t < 0.0 {
            // reflection through the waist plane
            let p = self.eval(-t);
            return MeridianPoint { r: p.r, x3: -p.x3, dr: -p.dr, dx3: p.dx3, d2r: p.d2r, d2x3: -p.d2x3 };
        }
        let z1 = self.neck.z1;
        if t <= z1 {
            let (g, dg, d2g) = self.neck.eval3(t);
            MeridianPoint { r: g, x3: t, dr: dg, dx3: 1.0, d2r: d2g, d2x3: 0.0 }
        } else {
            let r = self.neck.r1 + t - z1;
            let (v, d, dd) = self.graph.eval3(r);
            MeridianPoint { r, x3: v, dr: 1.0, dx3: d, d2r: 0.0, d2x3: dd }
        }
    }

    fn param_of_radius(&self, r: f64) -> f64 {
        let n = &self.neck;
        if r >= n.r1 {
            return n.z1 + r - n.r1;
        }
        if r <= 1.0 {
            return 0.0;
        }
        // G is increasing on [0, z1]
        let (mut a, mut b) = (0.0, n.z1);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if n.eval3(m).0 < r {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    fn sample_end(&self) -> f64 {
        self.param_of_radius(*self.graph.grid.last().unwrap())
    }

    fn height(&self, r: f64) -> Option<f64> {
        (r >= self.neck.r1).then(|| self.graph.value(r))
    }

    fn min_param(&self) -> f64 {
        f64::NEG_INFINITY
    }

    fn kinks(&self) -> Vec<f64> {
        vec![-self.neck.z1, self.neck.z1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leaf {
    Upper,
    Lower,
}

/// Base point, azimuth and signed normal distance of a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FermiPoint {
    /// meridian parameter of the foot point
    pub theta: f64,
    pub phi: f64,
    pub y: [f64; 3],
    pub z: f64,
    pub normal: [f64; 3],
    /// false when a second, equally close foot point was found
    pub unique: bool,
}

/// Fermi chart around one leaf of the rescaled surface `M_ε = ε⁻¹M`.
#[derive(Debug, Clone)]
pub struct FermiChart {
    meridian: Arc<dyn Meridian>,
    pub eps: f64,
    pub delta_bar: f64,
    /// `8 δ̄/ε`
    pub tube_halfwidth: f64,
    pub leaf: Leaf,
    /// largest principal curvature of the unscaled surface (sampled)
    pub max_curvature: f64,
}

const PROJECTION_SAMPLES: usize = 96;

impl FermiChart {
    /// Builds the chart and checks `1 - |κ| z > 0` across the tube.
    pub fn new(meridian: Arc<dyn Meridian>, eps: f64, delta_bar: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Domain(format!("eps={eps} must lie in (0, 1]")));
        }
        if !(delta_bar > 0.0) {
            return Err(Error::Domain("tube parameter must be positive".into()));
        }
        let end = meridian.sample_end();
        let mut kmax = 0.0f64;
        for i in 0..=4000 {
            // uniform in log(1+t)
            let t = ((1.0 + end).ln() * i as f64 / 4000.0).exp() - 1.0;
            let p = meridian.eval(t);
            kmax = kmax.max(p.kappa1().abs()).max(p.kappa2().abs());
        }
        let half = 8.0 * delta_bar;
        if !(kmax * half < 1.0) {
            return Err(Error::Degenerate(format!(
                "Fermi map not injective: max curvature {kmax} times tube half-width {half} ≥ 1"
            )));
        }
        Ok(Self { meridian, eps, delta_bar, tube_halfwidth: half / eps, leaf: Leaf::Upper, max_curvature: kmax })
    }

    pub fn catenoid(eps: f64, delta_bar: f64) -> Result<Self> {
        Self::new(Arc::new(CatenoidMeridian), eps, delta_bar)
    }

    pub fn flat(height: f64, eps: f64, delta_bar: f64) -> Result<Self> {
        Self::new(Arc::new(FlatMeridian { height }), eps, delta_bar)
    }

    /// Chart of the interface found by the reduced solve.
    pub fn from_solution(sol: &ReducedSolution, delta_bar: f64) -> Result<Self> {
        let m = ProfileMeridian::new(sol.neck.clone(), sol.profile.clone())?;
        Self::new(Arc::new(m), sol.report.eps, delta_bar)
    }

    /// The reflected leaf `x3 ↦ -x3` with the reflected normal.
    pub fn mirror(&self) -> Self {
        let mut c = self.clone();
        c.leaf = match self.leaf {
            Leaf::Upper => Leaf::Lower,
            Leaf::Lower => Leaf::Upper,
        };
        c
    }

    pub fn meridian(&self) -> &dyn Meridian {
        self.meridian.as_ref()
    }

    fn sigma(&self) -> f64 {
        match self.leaf {
            Leaf::Upper => 1.0,
            Leaf::Lower => -1.0,
        }
    }

    /// Rescaled leaf height `F_ε(ρ) = ε⁻¹F(ερ)` on the graph part.
    pub fn leaf_height(&self, rho: f64) -> Option<f64> {
        self.meridian.height(self.eps * rho).map(|h| h / self.eps)
    }

    pub fn surface_point(&self, theta: f64, phi: f64) -> [f64; 3] {
        let p = self.meridian.eval(theta);
        let k = 1.0 / self.eps;
        [k * p.r * phi.cos(), k * p.r * phi.sin(), k * self.sigma() * p.x3]
    }

    pub fn normal(&self, theta: f64, phi: f64) -> [f64; 3] {
        let (nr, n3) = self.meridian.eval(theta).normal();
        [nr * phi.cos(), nr * phi.sin(), self.sigma() * n3]
    }

    /// `Φ(θ, φ, z) = y + z ν(y)`
    pub fn map(&self, theta: f64, phi: f64, z: f64) -> [f64; 3] {
        let y = self.surface_point(theta, phi);
        let n = self.normal(theta, phi);
        [y[0] + z * n[0], y[1] + z * n[1], y[2] + z * n[2]]
    }

    /// Rescaled principal curvatures at the meridian parameter.
    pub fn kappas(&self, theta: f64) -> (f64, f64) {
        let p = self.meridian.eval(theta);
        (self.eps * p.kappa1(), self.eps * p.kappa2())
    }

    /// Local proxy for `‖κ‖_α` in rescaled units over arclength `window`
    /// around `theta`.
    pub fn holder_bound(&self, theta: f64, alpha: f64, window: f64) -> f64 {
        let (k1, k2) = self.kappas(theta);
        let speed = self.meridian.eval(theta).speed() / self.eps;
        let dt = window / speed;
        let mut best = 0.0f64;
        for i in 1..=16 {
            for sg in [-1.0, 1.0] {
                let t = theta + sg * dt * i as f64 / 16.0;
                if t < self.meridian.min_param() {
                    continue;
                }
                let (m1, m2) = self.kappas(t);
                let arc = window * i as f64 / 16.0;
                best = best.max((m1 - k1).abs().max((m2 - k2).abs()) / arc.powf(alpha));
            }
        }
        best
    }

    /// Nearest point on the leaf and signed distance, without the tube
    /// restriction.
    pub fn project(&self, x: [f64; 3]) -> FermiPoint {
        let e = self.eps;
        let rho = e * x[0].hypot(x[1]);
        let h = e * self.sigma() * x[2];
        let phi = if x[0] == 0.0 && x[1] == 0.0 { 0.0 } else { x[1].atan2(x[0]) };
        let m = self.meridian.as_ref();
        let dist2 = |t: f64| {
            let p = m.eval(t);
            (p.r - rho).powi(2) + (p.x3 - h).powi(2)
        };
        let tr = m.param_of_radius(rho);
        let dref = dist2(tr).sqrt();
        let lo = m.param_of_radius(rho - dref);
        let hi = m.param_of_radius(rho + dref).max(lo);
        let n = PROJECTION_SAMPLES;
        let ts: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
        let ds: Vec<f64> = ts.iter().map(|&t| dist2(t)).collect();
        let best = (0..=n).min_by(|&a, &b| ds[a].total_cmp(&ds[b])).unwrap();
        let refine = |k: usize| {
            let a = ts[k.saturating_sub(1)];
            let b = ts[(k + 1).min(n)];
            foot_in(m, rho, h, a, b)
        };
        let t0 = refine(best);
        let d0 = dist2(t0).sqrt();
        let mut unique = true;
        for k in 1..n {
            if k.abs_diff(best) <= 2 || ds[k] > ds[k - 1] || ds[k] > ds[k + 1] {
                continue;
            }
            if ds[k] > 1.5 * ds[best] + 1e-20 {
                continue;
            }
            let tk = refine(k);
            let dk = dist2(tk).sqrt();
            if (dk - d0).abs() <= 1e-9 * (1.0 + d0) && (tk - t0).abs() > 1e-6 {
                unique = false;
            }
        }
        let p = m.eval(t0);
        let (nr, n3) = p.normal();
        let side = (rho - p.r) * nr + (h - p.x3) * n3;
        let z = if d0 == 0.0 { 0.0 } else { d0.copysign(side) / e };
        FermiPoint { theta: t0, phi, y: self.surface_point(t0, phi), z, normal: self.normal(t0, phi), unique }
    }
}

/// Minimizer of the squared distance from `(ρ, h)` to the meridian on
/// `[a, b]`: safeguarded Newton on `(P - X)·P'` with bisection fallback.
fn foot_in(m: &dyn Meridian, rho: f64, h: f64, mut a: f64, mut b: f64) -> f64 {
    let grad = |t: f64| {
        let p = m.eval(t);
        let (u, v) = (p.r - rho, p.x3 - h);
        (u * p.dr + v * p.dx3, p.dr * p.dr + p.dx3 * p.dx3 + u * p.d2r + v * p.d2x3)
    };
    let (ga, gb) = (grad(a).0, grad(b).0);
    if ga >= 0.0 {
        return a;
    }
    if gb <= 0.0 {
        return b;
    }
    let mut t = 0.5 * (a + b);
    for _ in 0..200 {
        let (g, dg) = grad(t);
        if g == 0.0 {
            return t;
        }
        if g < 0.0 {
            a = t;
        } else {
            b = t;
        }
        let mut tn = t - g / dg;
        if !(dg > 0.0) || !(tn > a && tn < b) {
            tn = 0.5 * (a + b);
        }
        let done = (tn - t).abs() <= 1e-15 * (1.0 + t.abs());
        t = tn;
        if done || b - a <= 1e-16 * (1.0 + t.abs()) {
            break;
        }
    }
    t
}

/// Fermi coordinates of `x` relative to the chart's leaf.
pub fn fermi_coordinates(chart: &FermiChart, x: [f64; 3]) -> Result<FermiPoint> {
    let fp = chart.project(x);
    if !fp.unique {
        return Err(Error::OutOfTube(format!("nearest point of {x:?} is not unique")));
    }
    if fp.z.abs() > chart.tube_halfwidth {
        return Err(Error::OutOfTube(format!(
            "|z| = {} exceeds the tube half-width {}",
            fp.z.abs(),
            chart.tube_halfwidth
        )));
    }
    Ok(fp)
}

/// `(1 - κ1 z)(1 - κ2 z)` at the foot point with meridian parameter
/// `theta`: the volume factor `dx = J dσ(y) dz`.
pub fn fermi_jacobian(chart: &FermiChart, theta: f64, z: f64) -> Result<f64> {
    let (k1, k2) = chart.kappas(theta);
    let (a, b) = (1.0 - k1 * z, 1.0 - k2 * z);
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Degenerate(format!("Fermi factors {a}, {b} at z={z} are not positive")));
    }
    Ok(a * b)
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Graph chart `y ↦ (y, g(y))` over the tangent plane at the point
/// `(θ0, φ = 0)`, with axes along the meridian and the parallel so that
/// the second fundamental form is diagonal at the origin.
#[derive(Debug, Clone)]
pub struct TangentChart<'a> {
    chart: &'a FermiChart,
    pub theta0: f64,
    e1: [f64; 3],
    e2: [f64; 3],
    n: [f64; 3],
    pub kappa: (f64, f64),
}

impl<'a> TangentChart<'a> {
    pub fn new(chart: &'a FermiChart, theta0: f64) -> Self {
        let p = chart.meridian.eval(theta0);
        let v = p.speed();
        let sg = chart.sigma();
        let e1 = [p.dr / v, 0.0, sg * p.dx3 / v];
        let n = chart.normal(theta0, 0.0);
        // keeps (e1, e2, n) right-handed for either leaf
        let e2 = [n[1] * e1[2] - n[2] * e1[1], n[2] * e1[0] - n[0] * e1[2], n[0] * e1[1] - n[1] * e1[0]];
        Self { chart, theta0, e1, e2, n, kappa: chart.kappas(theta0) }
    }

    /// `S(θ, φ) - S(θ0, 0)` without cancelling the large absolute
    /// coordinates: short meridian increments are integrated from `P'`.
    fn offset(&self, t: f64, ph: f64) -> [f64; 3] {
        let c = self.chart;
        let m = c.meridian.as_ref();
        let p0 = m.eval(self.theta0);
        let dt = t - self.theta0;
        let (dr, dx3) = if dt.abs() <= 1e-2 {
            let (lo, hi) = (self.theta0.min(t), self.theta0.max(t));
            let mut cuts = vec![lo];
            cuts.extend(m.kinks().into_iter().filter(|&k| k > lo && k < hi));
            cuts.push(hi);
            let mut acc = (0.0, 0.0);
            for pair in cuts.windows(2) {
                for (x, w) in gl8().mapped(pair[0], pair[1]) {
                    let p = m.eval(x);
                    acc.0 += w * p.dr;
                    acc.1 += w * p.dx3;
                }
            }
            if t < self.theta0 {
                (-acc.0, -acc.1)
            } else {
                acc
            }
        } else {
            let p = m.eval(t);
            (p.r - p0.r, p.x3 - p0.x3)
        };
        let r = p0.r + dr;
        let half = (0.5 * ph).sin();
        let k = 1.0 / c.eps;
        [k * (dr * ph.cos() - 2.0 * p0.r * half * half), k * r * ph.sin(), k * c.sigma() * dx3]
    }

    /// Surface parameters `(θ, φ)` of the chart point over `y`.
    pub fn params(&self, y: [f64; 2]) -> Result<(f64, f64)> {
        let c = self.chart;
        let e = c.eps;
        let p0 = c.meridian.eval(self.theta0);
        let sg = c.sigma();
        let tmin = c.meridian.min_param();
        let mut t = self.theta0 + y[0] * e / p0.speed();
        let mut ph = sg * y[1] * e / p0.r;
        let scale = y[0].abs() + y[1].abs();
        let mut last = f64::INFINITY;
        for _ in 0..60 {
            let q = self.offset(t, ph);
            let f = [dot(q, self.e1) - y[0], dot(q, self.e2) - y[1]];
            let res = f[0].abs().max(f[1].abs());
            if res <= 1e-15 * scale || res == 0.0 {
                return Ok((t, ph));
            }
            // stagnation at the round-off floor
            if res >= last && res <= 1e-11 * (1.0 + scale) {
                return Ok((t, ph));
            }
            last = res;
            let p = c.meridian.eval(t);
            let st = [p.dr * ph.cos() / e, p.dr * ph.sin() / e, sg * p.dx3 / e];
            let sp = [-p.r * ph.sin() / e, p.r * ph.cos() / e, 0.0];
            let (a, b, cc, d) = (dot(st, self.e1), dot(sp, self.e1), dot(st, self.e2), dot(sp, self.e2));
            let det = a * d - b * cc;
            if !(det.abs() > 0.0) {
                break;
            }
            t -= (d * f[0] - b * f[1]) / det;
            ph -= (a * f[1] - cc * f[0]) / det;
            t = t.max(tmin);
        }
        Err(Error::NonConvergence(format!("tangent chart inversion failed at y={y:?}")))
    }

    /// `g(y)`: height of the surface over the tangent plane.
    pub fn graph(&self, y: [f64; 2]) -> Result<f64> {
        let (t, ph) = self.params(y)?;
        Ok(dot(self.offset(t, ph), self.n))
    }

    /// Offset, normal and curvatures of the chart point over `y`, all in
    /// the frame at the origin.
    pub fn local(&self, y: [f64; 2]) -> Result<ChartSample> {
        let (t, ph) = self.params(y)?;
        let q = self.offset(t, ph);
        let nu = self.chart.normal(t, ph);
        Ok(ChartSample {
            q: [dot(q, self.e1), dot(q, self.e2), dot(q, self.n)],
            nu: [dot(nu, self.e1), dot(nu, self.e2), dot(nu, self.n)],
            kappa: self.chart.kappas(t),
        })
    }

    /// Tangent-plane coordinates of the chart origin's frame.
    pub fn frame(&self) -> ([f64; 3], [f64; 3], [f64; 3]) {
        (self.e1, self.e2, self.n)
    }

    /// `Φ(y, z)` for the chart point over `y`.
    pub fn fermi_map(&self, y: [f64; 2], z: f64) -> Result<[f64; 3]> {
        let (t, ph) = self.params(y)?;
        Ok(self.chart.map(t, ph, z))
    }

    /// `√(1+|Dg|²)(1 - κ1 z)(1 - κ2 z)`
    pub fn jacobian(&self, y: [f64; 2], z: f64) -> Result<f64> {
        let (t, ph) = self.params(y)?;
        let nu = self.chart.normal(t, ph);
        let metric = 1.0 / dot(nu, self.n).abs();
        Ok(metric * fermi_jacobian(self.chart, t, z)?)
    }
}

/// Chart point over `y` seen from the tangent frame at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartSample {
    /// `(S - S0)·(e1, e2, n)`; the last entry is `g(y)`
    pub q: [f64; 3],
    /// normal in the frame
    pub nu: [f64; 3],
    pub kappa: (f64, f64),
}

impl ChartSample {
    /// Frame components of `Φ(0, z0) - Φ(y, z)`, free of cancellation for
    /// small offsets.
    pub fn separation(&self, z: f64, z0: f64) -> [f64; 3] {
        let [n1, n2, n3] = self.nu;
        let lift = (n1 * n1 + n2 * n2) / (1.0 + n3);
        [-self.q[0] - z * n1, -self.q[1] - z * n2, (z0 - z) - self.q[2] + z * lift]
    }

    /// `√(1+|Dg|²)(1 - κ1 z)(1 - κ2 z)`
    pub fn volume(&self, z: f64) -> f64 {
        (1.0 - self.kappa.0 * z) * (1.0 - self.kappa.1 * z) / self.nu[2].abs()
    }
}

/// Exact and expanded values of the kernel `|Φ(0,z0) - Φ(y,z)|^{-3-2s}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KernelExpansion {
    pub exact: f64,
    pub expanded: f64,
    /// remainder majorant times the kernel
    pub bound: f64,
    /// `|exact - expanded|/exact`
    pub relative_deviation: f64,
    /// `|g(y) - ½Σκ_i y_i²|`
    pub graph_remainder: f64,
}

impl KernelExpansion {
    pub fn within(&self, constant: f64) -> bool {
        (self.exact - self.expanded).abs() <= constant * self.bound
    }
}

/// Compares the kernel between `Φ(0, z0)` and `Φ(y, z)` in the tangent
/// chart at `theta0` with its two-term curvature expansion.
pub fn kernel_expansion_check(
    chart: &FermiChart,
    theta0: f64,
    z0: f64,
    z: f64,
    y: [f64; 2],
    s: f64,
    alpha: f64,
) -> Result<KernelExpansion> {
    let tc = TangentChart::new(chart, theta0);
    let p = 3.0 + 2.0 * s;
    let x0 = tc.fermi_map([0.0, 0.0], z0)?;
    let x1 = tc.fermi_map(y, z)?;
    let d = sub(x0, x1);
    let exact = dot(d, d).powf(-0.5 * p);
    let (k1, k2) = tc.kappa;
    let yy = y[0] * y[0] + y[1] * y[1];
    let q2 = yy + (z0 - z) * (z0 - z);
    let quad = k1 * y[0] * y[0] + k2 * y[1] * y[1];
    let base = q2.powf(-0.5 * p);
    let expanded = base * (1.0 + 0.5 * p * (z0 + z) * quad / q2);
    let ya = yy.sqrt();
    let window = ya.max(z.abs()).max(z0.abs()).max(1e-3);
    let ka = chart.holder_bound(theta0, alpha, window);
    let k0 = k1.abs().max(k2.abs());
    let bound = base * (ka * ya.powf(2.0 + alpha) * (z.abs() + z0.abs()) + k0 * k0 * yy * (yy + z * z + z0 * z0)) / q2;
    let graph_remainder = (tc.graph(y)? - 0.5 * quad).abs();
    Ok(KernelExpansion {
        exact,
        expanded,
        bound,
        relative_deviation: (exact - expanded).abs() / exact,
        graph_remainder,
    })
}

/// Ingredients of the approximate solution built from the layer around the
/// two leaves `M_ε^±`.
#[derive(Debug, Clone)]
pub struct ApproxSolutionSpec {
    /// upper leaf; the lower one is its mirror image
    pub chart: FermiChart,
    pub profile: Arc<LayerProfile>,
    pub cutoffs: CutoffPair,
    pub r_bar: f64,
    pub tau: f64,
    pub alpha: f64,
}

impl ApproxSolutionSpec {
    pub fn new(chart: FermiChart, profile: Arc<LayerProfile>, r_bar: f64, tau: f64, alpha: f64) -> Result<Self> {
        let s = profile.s;
        if chart.leaf != Leaf::Upper {
            return Err(Error::Config("approximate solution is assembled from the upper leaf".into()));
        }
        if !(alpha > 0.0 && alpha < 2.0 * s - 1.0) {
            return Err(Error::Config(format!("alpha={alpha} must lie in (0, {})", 2.0 * s - 1.0)));
        }
        let tmax = 1.0 + alpha / (2.0 * s);
        if !(tau > 1.0 && tau < tmax) {
            return Err(Error::Config(format!("tau={tau} must lie in (1, {tmax})")));
        }
        if !(r_bar > 0.0) || chart.meridian.height(r_bar).is_none() {
            return Err(Error::Config(format!("R_bar={r_bar} must lie on the graph part of the leaf")));
        }
        Ok(Self { chart, profile, cutoffs: CutoffPair, r_bar, tau, alpha })
    }

    pub fn eps(&self) -> f64 {
        self.chart.eps
    }

    fn far_height(&self, rho: f64) -> f64 {
        self.chart.leaf_height(rho).expect("far radius lies on the graph part")
    }

    /// `R0 = 1 + χ(|x'| - R̄/ε)(F_ε^{2s} - 1)`
    pub fn r0(&self, rho: f64) -> f64 {
        let c = self.cutoffs.chi(rho - self.r_bar / self.eps());
        if c == 0.0 {
            return 1.0;
        }
        1.0 + c * (self.far_height(rho).powf(2.0 * self.profile.s) - 1.0)
    }

    /// `R1 = η(|x'| - 2R̄/ε + 2) δ̄/ε + (1 - η) F_ε^τ`
    pub fn r1(&self, rho: f64) -> f64 {
        let e = self.eps();
        let n = self.cutoffs.eta(rho - 2.0 * self.r_bar / e + 2.0);
        let inner = self.chart.delta_bar / e;
        if n == 1.0 {
            return inner;
        }
        n * inner + (1.0 - n) * self.far_height(rho).powf(self.tau)
    }

    /// `u*_o`: +1 inside `|x'| ≤ 1/ε`, otherwise `sign z`.
    pub fn outer(&self, x: [f64; 3]) -> f64 {
        if x[0].hypot(x[1]) <= 1.0 / self.eps() {
            return 1.0;
        }
        let z = self.signed_distances(x).0;
        if z >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `(z, z₊, z₋)`; `z` is the distance to the leaf on the same side.
    pub fn signed_distances(&self, x: [f64; 3]) -> (f64, f64, f64) {
        let zp = self.chart.project(x).z;
        let zm = self.chart.project([x[0], x[1], -x[2]]).z;
        (if x[2] >= 0.0 { zp } else { zm }, zp, zm)
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let e = self.eps();
        let rho = x[0].hypot(x[1]);
        let own = if x[2] >= 0.0 { x } else { [x[0], x[1], -x[2]] };
        let z = self.chart.project(own).z;
        let cut = self.cutoffs.eta(e * z.abs() / (self.chart.delta_bar * self.r0(rho)));
        let two = self.cutoffs.chi(rho - self.r_bar / e);
        let w = &self.profile;
        let mut inner = w.w(z);
        if two > 0.0 {
            let other = self.chart.project([x[0], x[1], -own[2]]).z;
            inner += two * (w.w(z) + w.w(other) + 1.0 - w.w(z));
        }
        let outer = if rho <= 1.0 / e {
            1.0
        } else if z >= 0.0 {
            1.0
        } else {
            -1.0
        };
        cut * inner + (1.0 - cut) * outer
    }
}

/// `u*(x)`
pub fn approx_solution(spec: &ApproxSolutionSpec, x: [f64; 3]) -> f64 {
    spec.eval(x)
}
