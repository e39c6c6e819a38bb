use super::{growth_exponent, InitialProfile, Scales};
use crate::cutoff::CutoffPair;
use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions};
use crate::profile::{Radial, RadialProfile};
use crate::quad::gl8;

/// Scaling kernel `r g' - β g` of the far equation; vanishes on `A r^β`.
pub fn kernel_z1<R: Radial + ?Sized>(g: &R, r: f64, s: f64) -> f64 {
    let (v, d, _) = g.eval3(r);
    r * d - growth_exponent(s) * v
}

/// The two kernels of the outer linearized operator, in the unscaled
/// radius, on the grid nodes `>= r̃_ε`.
#[derive(Debug, Clone)]
pub struct Kernels {
    pub z1: RadialProfile,
    pub z2: RadialProfile,
    /// `max |r W(r) - 1|` over the nodes
    pub wronskian_defect: f64,
}

impl Kernels {
    /// `(Z1, Z1', Z2, Z2')` at `r`.
    pub fn at(&self, r: f64) -> (f64, f64, f64, f64) {
        let (a, da, _) = self.z1.eval3(r);
        let (b, db, _) = self.z2.eval3(r);
        (a, da, b, db)
    }

    pub fn wronskian(&self, r: f64) -> f64 {
        let (a, da, b, db) = self.at(r);
        a * db - da * b
    }
}

/// Build both kernels from a continuation `f` solving
/// `f'' + f'/r = k f^{-2s}` with `k = forcing·ε^{2s-1}`.
///
/// `Z1 = (r f' - β f)/|log ε|`; `Z2` starts at `r̃_ε` from data making the
/// Wronskian exactly `1/r` and is integrated together with `f`.
pub fn build_kernels(f: &RadialProfile, sc: &Scales, forcing: f64) -> Result<Kernels> {
    let s = sc.s;
    let beta = growth_exponent(s);
    let k = forcing * sc.eps_pow();
    let j0 = f
        .grid
        .iter()
        .position(|&r| (r - sc.tilde_r_eps).abs() <= 1e-12 * sc.tilde_r_eps)
        .ok_or_else(|| Error::Domain("grid must contain the outer matching radius".into()))?;
    let grid: Vec<f64> = f.grid[j0..].to_vec();
    let le = sc.log_eps;
    let (mut a, mut da, mut dda) = (Vec::new(), Vec::new(), Vec::new());
    for i in j0..f.len() {
        let (r, (v, d, dd)) = (f.grid[i], f.node(i));
        let ddd = super::f_eps_third(s, k, r, v, d, dd);
        a.push((r * d - beta * v) / le);
        da.push((r * dd + (1.0 - beta) * d) / le);
        dda.push((r * ddd + (2.0 - beta) * dd) / le);
    }
    let z1 = RadialProfile::new(grid.clone(), a, da, dda)?;
    let (zr, dzr) = (z1.f[0], z1.df[0]);
    let unit = sc.unit;
    let norm = zr * zr + unit * unit * dzr * dzr;
    if !(norm > 1e-300) {
        return Err(Error::Degenerate("Z1 and Z1' both vanish at the matching radius".into()));
    }
    // data in the rescaled variable, mapped back to r
    let d0 = sc.delta0;
    let z2_0 = -unit * dzr / (d0 * norm);
    let dz2_0 = zr / (unit * d0 * norm);
    let r0 = grid[0];
    let (f0, df0, _) = f.node(j0);
    let ts: Vec<f64> = grid[1..].iter().map(|r| r.ln()).collect();
    // y = (f, f_t, Z, Z_t) in t = log r
    let ys = integrate(
        |t, y, d| {
            let e2 = (2.0 * t).exp();
            let fp = y[0].max(1e-300);
            d[0] = y[1];
            d[1] = e2 * k * fp.powf(-2.0 * s);
            d[2] = y[3];
            d[3] = -e2 * 2.0 * s * k * fp.powf(-2.0 * s - 1.0) * y[2];
        },
        r0.ln(),
        &[f0, r0 * df0, z2_0, r0 * dz2_0],
        &ts,
        &OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() },
        |_, _| true,
    )?;
    let (mut b, mut db, mut ddb) = (vec![z2_0], vec![dz2_0], Vec::new());
    for (y, &r) in ys.iter().zip(&grid[1..]) {
        b.push(y[2]);
        db.push(y[3] / r);
    }
    for (i, &r) in grid.iter().enumerate() {
        let v = f.f[j0 + i];
        ddb.push(-db[i] / r - 2.0 * s * k * v.powf(-2.0 * s - 1.0) * b[i]);
    }
    let z2 = RadialProfile::new(grid.clone(), b, db, ddb)?;
    let mut defect = 0.0f64;
    for (i, &r) in grid.iter().enumerate() {
        let w = z1.f[i] * z2.df[i] - z1.df[i] * z2.f[i];
        defect = defect.max((r * w - 1.0).abs());
    }
    Ok(Kernels { z1, z2, wronskian_defect: defect })
}

/// Everything the linearized operator and its right inverse need.
#[derive(Debug, Clone)]
pub struct LinearContext {
    pub scales: Scales,
    pub forcing: f64,
    pub cutoffs: CutoffPair,
    pub f0: RadialProfile,
    pub kernels: Kernels,
    /// index of `r̃_ε` in the grid
    pub outer_index: usize,
}

impl LinearContext {
    pub fn new(init: &InitialProfile, cutoffs: CutoffPair) -> Result<Self> {
        let sc = init.scales;
        let kernels = build_kernels(&init.f_eps, &sc, init.forcing)?;
        let outer_index = init
            .f0
            .grid
            .iter()
            .position(|&r| (r - sc.tilde_r_eps).abs() <= 1e-12 * sc.tilde_r_eps)
            .ok_or_else(|| Error::Domain("grid must contain the outer matching radius".into()))?;
        Ok(Self { scales: sc, forcing: init.forcing, cutoffs, f0: init.f0.clone(), kernels, outer_index })
    }

    pub fn grid(&self) -> &[f64] {
        &self.f0.grid
    }

    /// `χ_ε(r)`: 0 up to `r_ε`, 1 from `r̃_ε` on.
    pub fn chi_eps(&self, r: f64) -> f64 {
        let sc = &self.scales;
        self.cutoffs.chi((r - sc.r_eps) / (sc.tilde_r_eps - sc.r_eps))
    }

    /// Potential `2s c ε^{2s-1} F0^{-2s-1}`.
    pub fn potential(&self, f0: f64) -> f64 {
        let s = self.scales.s;
        2.0 * s * self.forcing * self.scales.eps_pow() * f0.powf(-2.0 * s - 1.0)
    }

    /// Coefficients `(a, b, c)` with `L0 φ = a φ'' + b φ' + c φ` at `r`.
    pub fn coefficients(&self, r: f64) -> (f64, f64, f64) {
        let (f, d, dd) = self.f0.eval3(r);
        self.coefficients_with(r, f, d, dd)
    }

    fn coefficients_with(&self, r: f64, f: f64, d: f64, dd: f64) -> (f64, f64, f64) {
        let x = self.chi_eps(r);
        let w2 = 1.0 + d * d;
        let w3 = w2 * w2.sqrt();
        let w5 = w3 * w2;
        let a = (1.0 - x) / w3 + x;
        let b = (1.0 - x) * (1.0 / (r * w3) - 3.0 * d * dd / w5) + x / r;
        let c = x * self.potential(f);
        (a, b, c)
    }

    /// `L0 φ` at a point from `(φ, φ', φ'')`.
    pub fn apply_at(&self, r: f64, phi: (f64, f64, f64)) -> f64 {
        let (a, b, c) = self.coefficients(r);
        a * phi.2 + b * phi.1 + c * phi.0
    }
}

/// `L0 φ` at the grid nodes of `φ` (which must share the context grid).
pub fn l0_apply(phi: &RadialProfile, ctx: &LinearContext) -> Result<Vec<f64>> {
    if phi.grid != ctx.f0.grid {
        return Err(Error::Domain("profile and operator live on different grids".into()));
    }
    Ok((0..phi.len())
        .map(|i| {
            let (f, d, dd) = ctx.f0.node(i);
            let (a, b, c) = ctx.coefficients_with(phi.grid[i], f, d, dd);
            let (p, dp, ddp) = phi.node(i);
            a * ddp + b * dp + c * p
        })
        .collect())
}

/// Right inverse of `L0` with `φ(r1) = φ'(r1) = 0`.
///
/// Up to `r̃_ε` the ODE is integrated directly; beyond it `φ` is written by
/// variation of parameters on the two kernels, with constants fixed by
/// value and slope continuity at `r̃_ε`.
pub fn right_inverse(h: &RadialProfile, ctx: &LinearContext) -> Result<RadialProfile> {
    let grid = ctx.grid();
    if h.grid != grid {
        return Err(Error::Domain("datum and operator live on different grids".into()));
    }
    let n = grid.len();
    let jt = ctx.outer_index;
    let mut f = vec![0.0; n];
    let mut df = vec![0.0; n];
    let mut d2f = vec![0.0; n];
    let ys = integrate(
        |r, y, d| {
            let (a, b, c) = ctx.coefficients(r);
            let hv = h.value(r);
            d[0] = y[1];
            d[1] = (hv - b * y[1] - c * y[0]) / a;
        },
        grid[0],
        &[0.0, 0.0],
        &grid[1..=jt],
        &OdeOptions { rtol: 1e-11, atol: 1e-14, ..Default::default() },
        |_, _| true,
    )?;
    for (i, y) in ys.iter().enumerate() {
        f[i + 1] = y[0];
        df[i + 1] = y[1];
    }
    for i in 0..=jt {
        let (a, b, c) = ctx.coefficients(grid[i]);
        d2f[i] = (h.f[i] - b * df[i] - c * f[i]) / a;
    }
    // outer variation of parameters
    let kz = &ctx.kernels;
    let rt = grid[jt];
    let (z1, dz1, z2, dz2) = kz.at(rt);
    let w = z1 * dz2 - dz1 * z2;
    if !(w.abs() * rt > 1e-8) || ((rt * w) - 1.0).abs() > 1e-4 {
        return Err(Error::Degenerate(format!("matching system singular: r W = {}", rt * w)));
    }
    let c1 = (f[jt] * dz2 - df[jt] * z2) / w;
    let c2 = (z1 * df[jt] - dz1 * f[jt]) / w;
    let (mut i1, mut i2) = (0.0, 0.0);
    let rule = gl8();
    for i in jt..n {
        let r = grid[i];
        if i > jt {
            let (lo, hi) = (grid[i - 1], r);
            for (x, wt) in rule.mapped(lo, hi) {
                let hv = h.value(x);
                let (a, _, b, _) = kz.at(x);
                i1 += wt * x * a * hv;
                i2 += wt * x * b * hv;
            }
        }
        let (a, da, b, db) = kz.at(r);
        let v = c1 * a + c2 * b - a * i2 + b * i1;
        let dv = c1 * da + c2 * db - da * i2 + db * i1;
        f[i] = v;
        df[i] = dv;
        let (f0, _, _) = ctx.f0.node(i);
        d2f[i] = h.f[i] - dv / r - ctx.potential(f0) * v;
    }
    RadialProfile::new(grid.to_vec(), f, df, d2f)
}
