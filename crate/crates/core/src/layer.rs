//! The one-dimensional heteroclinic layer of `(-∂_zz)^s w + w^3 - w = 0`
//! and the quantities derived from it.
//!
//! The discrete solver interpolates the odd unknowns with a clamped cubic
//! spline on `[-Z, Z]`, continued outside by `±(1 - q (Z/|z|)^{2s})` with
//! `q = 1 - w(Z)`. The singular integral of the interpolant is evaluated
//! exactly on the two intervals touching the target node and by Gauss rules
//! elsewhere, so the operator is an affine map of the nodal values.

use crate::constants::{c_ns, FracOrder};
use crate::cutoff::CutoffPair;
use crate::error::{Error, Result};
use crate::pv::{frac_laplacian_1d, Field1d, QuadratureScheme, TailModel};
use crate::quad::{composite, gl16, gl32, gl8, loglog_slope, pairwise_sum, toward_left};
use crate::spline::CubicSpline;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Grid clustering parameter of the sinh map.
const SINH_STRETCH: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct LayerProfile {
    pub s: f64,
    /// Symmetric nodes on `[-Z_max, Z_max]`.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub derivative_values: Vec<f64>,
    pub c_w: f64,
    /// Free-exponent log-log fit of `1 - w` on the outer quarter.
    pub tail_exponent: f64,
    /// Sup of the equation residual at nodes and midpoints, measured with
    /// the generic PV quadrature.
    pub residual_sup: f64,
    pub z_max: f64,
    pub node_count: usize,
    /// `1 - w(Z_max)`
    pub deficit: f64,
    spline: CubicSpline,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct LayerMetadata {
    pub s: f64,
    pub c_w: f64,
    pub residual_sup: f64,
    #[serde(rename = "Z_max")]
    pub z_max: f64,
    pub node_count: usize,
    pub tail_exponent: f64,
}

impl LayerProfile {
    fn from_half(s: f64, grid: Vec<f64>, half: &[f64]) -> Result<Self> {
        let n = half.len() - 1;
        let z = *grid.last().unwrap();
        let mut values = vec![0.0; 2 * n + 1];
        for k in 1..=n {
            values[n + k] = half[k];
            values[n - k] = -half[k];
        }
        let q = 1.0 - half[n];
        let slope = 2.0 * s * q / z;
        let spline = CubicSpline::clamped(&grid, &values, slope, slope)?;
        let derivative_values = spline.node_slopes();
        Ok(Self {
            s,
            node_count: grid.len(),
            z_max: z,
            grid,
            values,
            derivative_values,
            c_w: f64::NAN,
            tail_exponent: f64::NAN,
            residual_sup: f64::NAN,
            deficit: q,
            spline,
        })
    }

    pub fn order(&self) -> FracOrder {
        FracOrder::new(self.s).expect("profile order is valid")
    }

    /// `(w, w', w'')` including the algebraic continuation beyond `Z_max`.
    pub fn eval3(&self, z: f64) -> (f64, f64, f64) {
        let zm = self.z_max;
        if z.abs() <= zm {
            return self.spline.eval3(z);
        }
        let s2 = 2.0 * self.s;
        let a = z.abs();
        let r = (zm / a).powf(s2);
        let sg = z.signum();
        let v = sg * (1.0 - self.deficit * r);
        let d1 = self.deficit * s2 * r / a;
        let d2 = -sg * self.deficit * s2 * (s2 + 1.0) * r / (a * a);
        (v, d1, d2)
    }

    pub fn w(&self, z: f64) -> f64 {
        self.eval3(z).0
    }

    pub fn derivative(&self, z: f64) -> f64 {
        self.eval3(z).1
    }

    /// Far-field model matching the continuation exactly.
    pub fn tail_model(&self) -> TailModel {
        TailModel::Algebraic { power: 2.0 * self.s, coeff: self.deficit * self.z_max.powf(2.0 * self.s) }
    }

    /// PV scheme with the profile's tail closure attached.
    pub fn scheme(&self) -> QuadratureScheme {
        QuadratureScheme::default().with_tail(self.tail_model())
    }

    /// `(-∂_zz)^s w + w^3 - w` at `z` via the generic PV rule.
    pub fn residual_at(&self, z: f64, scheme: &QuadratureScheme) -> Result<f64> {
        let lap = frac_laplacian_1d(self, z, self.order(), scheme)?;
        let w = self.w(z);
        Ok(lap + w * w * w - w)
    }

    pub fn metadata(&self) -> LayerMetadata {
        LayerMetadata {
            s: self.s,
            c_w: self.c_w,
            residual_sup: self.residual_sup,
            z_max: self.z_max,
            node_count: self.node_count,
            tail_exponent: self.tail_exponent,
        }
    }
}

impl Field1d for LayerProfile {
    fn value(&self, z: f64) -> f64 {
        self.w(z)
    }
    fn second_derivative(&self, z: f64) -> f64 {
        self.eval3(z).2
    }
    fn far_limits(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }
    fn knots(&self) -> &[f64] {
        &self.grid
    }
}

/// `x_k = Z sinh(κ k/n) / sinh(κ)`, `k = -n..=n`.
pub fn sinh_grid(z_max: f64, n_half: usize, stretch: f64) -> Vec<f64> {
    let sk = stretch.sinh();
    (0..=2 * n_half)
        .map(|i| {
            let k = i as f64 - n_half as f64;
            if i == n_half {
                0.0
            } else {
                z_max * (stretch * k / n_half as f64).sinh() / sk
            }
        })
        .collect()
}

/// `∫_start^∞ (Z/x)^{2s} (x - z0)^{-1-2s} dx` for `start > z0`.
fn tail_shape(z0: f64, start: f64, z_max: f64, s: f64) -> f64 {
    let s2 = 2.0 * s;
    let gap = if z0 > 0.0 { (start - z0) / start } else { 1.0 };
    let breaks = if gap < 0.25 {
        let mut b: Vec<f64> = toward_left(0.0, 1.0, 2.0, gap).iter().map(|u| 1.0 - u).collect();
        b.reverse();
        b
    } else {
        vec![0.0, 0.5, 1.0]
    };
    let pre = (z_max / start).powf(s2) * start;
    pre * composite(gl16(), &breaks, |v| v.powf(2.0 * s2 - 1.0) * (start - z0 * v).powf(-1.0 - s2))
}

/// Per-target data of the discrete operator.
struct TargetRow {
    /// Gauss moments `∫ t^k |x - z0|^{-1-2s}` on non-adjacent intervals.
    moments: Vec<[f64; 4]>,
    right_mass: f64,
    right_shape: f64,
    left_mass: f64,
    left_shape: f64,
}

struct DiscreteOperator {
    s: f64,
    grid: Vec<f64>,
    n_half: usize,
    rows: Vec<TargetRow>,
}

impl DiscreteOperator {
    fn new(s: f64, grid: Vec<f64>) -> Self {
        let n_half = (grid.len() - 1) / 2;
        let z = *grid.last().unwrap();
        let s2 = 2.0 * s;
        let nint = grid.len() - 1;
        let rows = (1..=n_half)
            .into_par_iter()
            .map(|k| {
                let i = n_half + k;
                let z0 = grid[i];
                let mut moments = vec![[0.0; 4]; nint];
                for (j, m) in moments.iter_mut().enumerate() {
                    if j + 1 == i || j == i {
                        continue;
                    }
                    let (a, b) = (grid[j], grid[j + 1]);
                    for (x, wt) in gl8().mapped(a, b) {
                        let t = x - a;
                        let ker = wt * (x - z0).abs().powf(-1.0 - s2);
                        m[0] += ker;
                        m[1] += ker * t;
                        m[2] += ker * t * t;
                        m[3] += ker * t * t * t;
                    }
                }
                let (right_mass, right_shape) = if i < grid.len() - 1 {
                    ((z - z0).powf(-s2) / s2, tail_shape(z0, z, z, s))
                } else {
                    let h = grid[i] - grid[i - 1];
                    // ∫_0^h [(1+t/Z)^{-2s} - 1 + 2s t/Z] t^{-1-2s} dt by the binomial series
                    let mut series = 0.0;
                    let mut coef = -s2 * (-s2 - 1.0) / 2.0;
                    let e = h / z;
                    let mut ek = e * e;
                    for kk in 2..200 {
                        let term = coef * ek * h.powf(-s2) / (kk as f64 - s2);
                        series += term;
                        if term.abs() < 1e-18 {
                            break;
                        }
                        coef *= (-s2 - kk as f64) / (kk as f64 + 1.0);
                        ek *= e;
                    }
                    (h.powf(-s2) / s2, tail_shape(z, z + h, z, s) + series)
                };
                TargetRow {
                    moments,
                    right_mass,
                    right_shape,
                    left_mass: (z + z0).powf(-s2) / s2,
                    left_shape: tail_shape(-z0, z, z, s),
                }
            })
            .collect();
        Self { s, grid, n_half, rows }
    }

    /// Operator values at the positive nodes for full nodal data `y` and
    /// tail deficit `q`; affine in `(y, q)`.
    fn apply(&self, y: &[f64], q: f64) -> Vec<f64> {
        let g = &self.grid;
        let s = self.s;
        let s2 = 2.0 * s;
        let z = *g.last().unwrap();
        let slope = s2 * q / z;
        let sp = CubicSpline::clamped(g, y, slope, slope).expect("grid validated");
        let last = g.len() - 1;
        self.rows
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let i = self.n_half + k + 1;
                let w0 = y[i];
                let mut terms = Vec::with_capacity(g.len() + 4);
                for (j, m) in row.moments.iter().enumerate() {
                    if j + 1 == i || j == i {
                        continue;
                    }
                    terms.push((w0 - sp.a[j]) * m[0] - sp.b[j] * m[1] - sp.c[j] * m[2] - sp.d[j] * m[3]);
                }
                let hl = g[i] - g[i - 1];
                let (cl, dl) = (sp.c[i - 1] + 3.0 * sp.d[i - 1] * hl, sp.d[i - 1]);
                if i < last {
                    let hr = g[i + 1] - g[i];
                    let b = sp.b[i];
                    terms.push(-b * (hr.powf(1.0 - s2) - hl.powf(1.0 - s2)) / (1.0 - s2));
                    terms.push(-sp.c[i] * hr.powf(2.0 - s2) / (2.0 - s2) - sp.d[i] * hr.powf(3.0 - s2) / (3.0 - s2));
                } else {
                    // the slope term cancels against the continuation near Z
                }
                terms.push(-cl * hl.powf(2.0 - s2) / (2.0 - s2) + dl * hl.powf(3.0 - s2) / (3.0 - s2));
                terms.push(row.right_mass * (w0 - 1.0) + row.right_shape * q);
                terms.push(row.left_mass * (w0 + 1.0) - row.left_shape * q);
                c_ns(1, s) * pairwise_sum(&terms)
            })
            .collect()
    }

    fn full_values(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n_half;
        let mut y = vec![0.0; 2 * n + 1];
        for k in 1..=n {
            y[n + k] = u[k - 1];
            y[n - k] = -u[k - 1];
        }
        y
    }

    /// Affine representation `L(u) = A u + m_q (1 - u_N) + g`.
    fn assemble(&self) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
        let n = self.n_half;
        let zero = vec![0.0; 2 * n + 1];
        let g = self.apply(&zero, 0.0);
        let mq: Vec<f64> = self.apply(&zero, 1.0).iter().zip(&g).map(|(a, b)| a - b).collect();
        let cols: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut u = vec![0.0; n];
                u[k] = 1.0;
                let y = self.full_values(&u);
                self.apply(&y, 0.0).iter().zip(&g).map(|(a, b)| a - b).collect()
            })
            .collect();
        let a = DMatrix::from_fn(n, n, |i, j| cols[j][i]);
        (a, DVector::from_vec(mq), DVector::from_vec(g))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LayerOptions {
    pub z_max: f64,
    pub node_count: usize,
    pub tol: f64,
    /// Always walk down from `s = 0.95` instead of trying a direct solve.
    pub continuation: bool,
}

impl Default for LayerOptions {
    fn default() -> Self {
        Self { z_max: 100.0, node_count: 800, tol: 1e-10, continuation: false }
    }
}

fn newton(op: &DiscreteOperator, parts: &(DMatrix<f64>, DVector<f64>, DVector<f64>), init: &[f64]) -> Result<Vec<f64>> {
    let (a, mq, g) = parts;
    let n = op.n_half;
    let resid = |u: &DVector<f64>| -> DVector<f64> {
        let mut r = a * u + mq * (1.0 - u[n - 1]) + g;
        for i in 0..n {
            r[i] += u[i] * u[i] * u[i] - u[i];
        }
        r
    };
    let mut u = DVector::from_column_slice(init);
    let mut r = resid(&u);
    let mut rn = r.amax();
    for _ in 0..60 {
        if rn < 1e-12 {
            return Ok(u.iter().copied().collect());
        }
        let mut jac = a.clone();
        for i in 0..n {
            jac[(i, n - 1)] -= mq[i];
            jac[(i, i)] += 3.0 * u[i] * u[i] - 1.0;
        }
        let step = jac
            .lu()
            .solve(&r)
            .ok_or_else(|| Error::NonConvergence("singular layer Jacobian".into()))?;
        let mut lam = 1.0;
        loop {
            let trial = &u - &step * lam;
            let tr = resid(&trial);
            let tn = tr.amax();
            if tn < rn || lam < 1e-3 {
                u = trial;
                r = tr;
                rn = tn;
                break;
            }
            lam *= 0.5;
        }
        if u.iter().any(|v| !v.is_finite() || v.abs() > 2.0) {
            return Err(Error::NonConvergence("layer Newton iterate left the bounded range".into()));
        }
    }
    if rn < 1e-9 {
        Ok(u.iter().copied().collect())
    } else {
        Err(Error::NonConvergence(format!("layer Newton stalled at residual {rn:.3e}")))
    }
}

fn discrete_solve(s: f64, grid: &[f64], init: &[f64]) -> Result<Vec<f64>> {
    let op = DiscreteOperator::new(s, grid.to_vec());
    let parts = op.assemble();
    newton(&op, &parts, init)
}

fn continuation_solve(s: f64, grid: &[f64], init: &[f64]) -> Result<Vec<f64>> {
    let mut cur = 0.95_f64.max(s);
    let mut u = discrete_solve(cur, grid, init)?;
    let mut step = 0.05;
    while cur > s {
        let next = (cur - step).max(s);
        match discrete_solve(next, grid, &u) {
            Ok(v) => {
                u = v;
                cur = next;
            }
            Err(e) => {
                step /= 2.0;
                if step < 1e-3 {
                    return Err(e);
                }
            }
        }
    }
    Ok(u)
}

/// Least-squares tail fit on the outer quarter of the positive nodes:
/// returns (free exponent, pinned coefficient, worst relative misfit).
fn fit_tail(profile: &LayerProfile) -> (f64, f64, f64) {
    let n = (profile.grid.len() - 1) / 2;
    let start = n + (3 * n) / 4;
    let zs: Vec<f64> = profile.grid[start..].to_vec();
    let ds: Vec<f64> = profile.values[start..].iter().map(|w| 1.0 - w).collect();
    let (slope, _) = loglog_slope(&zs, &ds);
    let s2 = 2.0 * profile.s;
    let mean_log: f64 = zs.iter().zip(&ds).map(|(z, d)| d.ln() + s2 * z.ln()).sum::<f64>() / zs.len() as f64;
    let c_w = mean_log.exp();
    let misfit = zs
        .iter()
        .zip(&ds)
        .map(|(z, d)| {
            let m = c_w * z.powf(-s2);
            (d - m).abs() / m
        })
        .fold(0.0, f64::max);
    (-slope, c_w, misfit)
}

/// Solve for the increasing odd layer on `[-Z_max, Z_max]`.
pub fn solve_layer(s: FracOrder, z_max: f64, node_count: usize, tol: f64) -> Result<LayerProfile> {
    solve_layer_with(s, &LayerOptions { z_max, node_count, tol, continuation: false })
}

pub fn solve_layer_with(s: FracOrder, opts: &LayerOptions) -> Result<LayerProfile> {
    let s = s.get();
    if s <= 0.5 {
        return Err(Error::Domain("the layer solver needs s > 1/2".into()));
    }
    if !(opts.z_max >= 50.0) {
        return Err(Error::Domain("Z_max must be at least 50".into()));
    }
    if opts.node_count < 400 {
        return Err(Error::Domain("node_count must be at least 400".into()));
    }
    if !(opts.tol >= 1e-10) {
        return Err(Error::Domain("tol must be at least 1e-10".into()));
    }
    let n_half = opts.node_count / 2;
    let grid = sinh_grid(opts.z_max, n_half, SINH_STRETCH);
    let init: Vec<f64> = grid[n_half + 1..].iter().map(|x| (x / 2f64.sqrt()).tanh()).collect();
    let u = if opts.continuation {
        continuation_solve(s, &grid, &init)?
    } else {
        match discrete_solve(s, &grid, &init) {
            Ok(u) => u,
            Err(_) => continuation_solve(s, &grid, &init)?,
        }
    };
    let mut half = vec![0.0];
    half.extend_from_slice(&u);
    let mut profile = LayerProfile::from_half(s, grid, &half)?;
    if half.windows(2).any(|w| !(w[1] > w[0])) || half.iter().any(|v| v.abs() >= 1.0) {
        return Err(Error::NonConvergence("layer is not monotone and bounded by 1".into()));
    }
    let (expo, c_w, misfit) = fit_tail(&profile);
    profile.tail_exponent = expo;
    profile.c_w = c_w;
    if misfit > 0.05 {
        return Err(Error::TailFit(format!("tail misfit {misfit:.3} exceeds 5%")));
    }
    profile.residual_sup = measured_residual(&profile)?;
    if profile.residual_sup > opts.tol.max(1e-4) {
        return Err(Error::NonConvergence(format!("layer residual {:.3e} above tolerance", profile.residual_sup)));
    }
    Ok(profile)
}

/// Residual sup over non-negative nodes and midpoints using the generic
/// PV rule (odd symmetry covers the negative half).
pub fn measured_residual(profile: &LayerProfile) -> Result<f64> {
    let n = (profile.grid.len() - 1) / 2;
    let g = &profile.grid;
    let mut pts: Vec<f64> = g[n..].to_vec();
    pts.extend(g[n..].windows(2).map(|w| 0.5 * (w[0] + w[1])));
    let scheme = profile.scheme();
    let vals: Vec<Result<f64>> = pts.par_iter().map(|&z| profile.residual_at(z, &scheme)).collect();
    let mut sup: f64 = 0.0;
    for v in vals {
        sup = sup.max(v?.abs());
    }
    Ok(sup)
}

fn ch_breaks(profile: &LayerProfile, z0: f64, scheme: &QuadratureScheme, budget: usize) -> Vec<f64> {
    let rho = scheme.excision_radius;
    let t_max = scheme.truncation_radius;
    let mut b = toward_left(0.0, 1.0, 2.0, rho);
    let k = (budget / 8).max(4);
    for i in 1..=k {
        b.push(1.0 + (t_max - 1.0) * (i as f64 / k as f64).powf(scheme.grading_exponent));
    }
    for x in &profile.grid {
        let d = (x - z0).abs();
        if d > rho && d < t_max {
            b.push(d);
        }
    }
    b.sort_by(|a, c| a.partial_cmp(c).unwrap());
    b.dedup_by(|a, c| (*a - *c).abs() < 1e-13 * (1.0 + a.abs()));
    // the first panel [0, b[0]] is handled by the local Taylor model
    b.retain(|&x| x >= rho);
    b
}

fn c_h_once(z0: f64, p: &LayerProfile, scheme: &QuadratureScheme, budget: usize) -> f64 {
    let s2 = 2.0 * p.s;
    let t_max = scheme.truncation_radius;
    let breaks = ch_breaks(p, z0, scheme, budget);
    let near = 2.0 * p.derivative(z0) * breaks[0].powf(2.0 - s2) / (2.0 - s2);
    let body = composite(gl8(), &breaks, |t| (p.w(z0 + t) - p.w(z0 - t)) * t.powf(-s2));
    let cq = p.deficit * p.z_max.powf(s2);
    let shape = gl32().integrate(0.0, 1.0, |v| {
        let x = z0 * v / t_max;
        v.powf(2.0 * s2 - 2.0) * ((1.0 + x).powf(-s2) + (1.0 - x).powf(-s2))
    });
    let tail = 2.0 * t_max.powf(1.0 - s2) / (s2 - 1.0) - cq * t_max.powf(1.0 - 2.0 * s2) * shape;
    c_ns(1, p.s) * pairwise_sum(&[near, body, tail])
}

fn c_h_alt_once(z0: f64, p: &LayerProfile, scheme: &QuadratureScheme, budget: usize) -> f64 {
    let s2 = 2.0 * p.s;
    let t_max = scheme.truncation_radius;
    let breaks = ch_breaks(p, z0, scheme, budget);
    let near = 2.0 * p.derivative(z0) * breaks[0].powf(2.0 - s2) / (2.0 - s2);
    let body = composite(gl8(), &breaks, |u| (p.derivative(z0 + u) + p.derivative(z0 - u)) * u.powf(1.0 - s2));
    let cq = p.deficit * p.z_max.powf(s2);
    let shape = gl32().integrate(0.0, 1.0, |v| {
        let x = z0 * v / t_max;
        v.powf(2.0 * s2 - 2.0) * ((1.0 + x).powf(-1.0 - s2) + (1.0 - x).powf(-1.0 - s2))
    });
    let tail = s2 * cq * t_max.powf(1.0 - 2.0 * s2) * shape;
    c_ns(1, p.s) / (s2 - 1.0) * pairwise_sum(&[near, body, tail])
}

fn check_window(z0: f64, p: &LayerProfile) -> Result<()> {
    if z0.abs() > p.z_max / 2.0 {
        return Err(Error::Domain(format!("|z0|={} exceeds Z_max/2", z0.abs())));
    }
    Ok(())
}

fn refined<F: Fn(usize) -> f64>(f: F, scheme: &QuadratureScheme, what: &str) -> Result<f64> {
    let a = f(scheme.node_budget);
    let b = f(2 * scheme.node_budget);
    if (a - b).abs() > scheme.rel_tol * b.abs().max(1e-8) {
        return Err(Error::Quadrature(format!("{what}: refinement changed value by {:.3e}", (a - b).abs())));
    }
    Ok(b)
}

/// Curvature weight `C(1,s) ∫ (w(z0) - w(z)) (z0 - z) |z0 - z|^{-1-2s} dz`.
pub fn c_h(z0: f64, profile: &LayerProfile, scheme: &QuadratureScheme) -> Result<f64> {
    check_window(z0, profile)?;
    scheme.validate()?;
    refined(|b| c_h_once(z0, profile, scheme, b), scheme, "c_H")
}

/// The same weight through `C(1,s)/(2s-1) ∫ w'(z) |z0 - z|^{1-2s} dz`.
pub fn c_h_alt(z0: f64, profile: &LayerProfile, scheme: &QuadratureScheme) -> Result<f64> {
    check_window(z0, profile)?;
    scheme.validate()?;
    refined(|b| c_h_alt_once(z0, profile, scheme, b), scheme, "c_H (derivative form)")
}

/// Scheme whose truncation radius clears `|z0|` with room for the tail
/// closure.
fn far_scheme(z0: f64, profile: &LayerProfile) -> QuadratureScheme {
    let mut sc = profile.scheme();
    sc.truncation_radius = sc.truncation_radius.max(4.0 * z0.abs());
    sc
}

/// `c_H(z0)` at any height. Beyond `Z_max/2` the derivative form is used
/// with the truncation radius pushed past `|z0|`.
pub fn c_h_anywhere(z0: f64, profile: &LayerProfile) -> Result<f64> {
    if z0.abs() <= profile.z_max / 2.0 {
        return c_h(z0, profile, &profile.scheme());
    }
    let sc = far_scheme(z0, profile);
    refined(|b| c_h_alt_once(z0, profile, &sc, b), &sc, "c_H (far)")
}

/// `(-∂_zz)^s w (z0)` at any height.
pub fn line_operator(profile: &LayerProfile, z0: f64) -> Result<f64> {
    frac_laplacian_1d(profile, z0, profile.order(), &far_scheme(z0, profile))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ProjectionConstants {
    pub c_bar: f64,
    pub c_bar_pm: f64,
    pub r_zeta: f64,
}

impl ProjectionConstants {
    /// Ratio used as the far-field forcing coefficient.
    pub fn forcing(&self) -> f64 {
        self.c_bar_pm / self.c_bar
    }
}

/// Breakpoints on `[0, 2R]`: profile nodes plus the cut-off corners.
fn projection_breaks(profile: &LayerProfile, r_zeta: f64) -> Vec<f64> {
    let mut b: Vec<f64> = profile.grid.iter().copied().filter(|&x| x >= 0.0 && x < 2.0 * r_zeta).collect();
    b.push(r_zeta);
    b.push(2.0 * r_zeta);
    b.sort_by(|a, c| a.partial_cmp(c).unwrap());
    b.dedup();
    b
}

/// `C̄ = ∫ c_H ζ w'` and `C̄_± = ∫ 3 c_w (1 - w^2) ζ w'` with
/// `ζ(z) = η(|z|/R_ζ)`.
pub fn projection_constants(profile: &LayerProfile, cutoffs: &CutoffPair, r_zeta: f64) -> Result<ProjectionConstants> {
    if !(r_zeta > 0.0) || 2.0 * r_zeta > profile.z_max {
        return Err(Error::Domain("need 0 < 2 R_zeta <= Z_max".into()));
    }
    let scheme = profile.scheme();
    let breaks = projection_breaks(profile, r_zeta);
    let nodes: Vec<(f64, f64)> = breaks.windows(2).flat_map(|w| gl8().mapped(w[0], w[1]).collect::<Vec<_>>()).collect();
    let ch: Vec<f64> = nodes.par_iter().map(|&(z, _)| c_h_once(z, profile, &scheme, scheme.node_budget)).collect();
    let mut t1 = Vec::with_capacity(nodes.len());
    let mut t2 = Vec::with_capacity(nodes.len());
    for (&(z, wt), c) in nodes.iter().zip(&ch) {
        let (w, dw, _) = profile.eval3(z);
        let zt = cutoffs.zeta(z, r_zeta);
        t1.push(wt * c * zt * dw);
        t2.push(wt * (1.0 - w * w) * zt * dw);
    }
    let c_bar = 2.0 * pairwise_sum(&t1);
    let c_bar_pm = 3.0 * profile.c_w * 2.0 * pairwise_sum(&t2);
    if !(c_bar > 0.0 && c_bar_pm > 0.0) {
        return Err(Error::Degenerate(format!("projection constants not positive: {c_bar}, {c_bar_pm}")));
    }
    Ok(ProjectionConstants { c_bar, c_bar_pm, r_zeta })
}

/// `3 (w(z+) + w(z-)) (1 + w(z+)) (1 + w(z-))`.
pub fn far_interaction(profile: &LayerProfile, z_plus: f64, z_minus: f64) -> f64 {
    interaction_term(profile.w(z_plus), profile.w(z_minus))
}

pub fn interaction_term(a: f64, b: f64) -> f64 {
    3.0 * (a + b) * (1.0 + a) * (1.0 + b)
}
