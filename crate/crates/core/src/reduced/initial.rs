use super::{growth_exponent, log_grid, Scales};
use crate::cutoff::CutoffPair;
use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions};
use crate::profile::{Radial, RadialProfile};

/// Matching radius of the graph part and the neck.
pub const R1: f64 = std::f64::consts::SQRT_2;

/// Height of the catenoid arc at [`R1`], `log(1+√2)`.
pub fn z1() -> f64 {
    (1.0 + std::f64::consts::SQRT_2).ln()
}

/// `arccosh r` with three derivatives. `r = 1` is rejected because the
/// derivatives blow up there; use [`catenoid_height`] for the value alone.
pub fn catenoid_arc(r: f64) -> Result<[f64; 4]> {
    if !(r > 1.0) {
        return Err(if r == 1.0 {
            Error::Degenerate("catenoid arc derivatives are singular at r = 1".into())
        } else {
            Error::Domain(format!("catenoid arc needs r >= 1, got {r}"))
        });
    }
    let q2 = r * r - 1.0;
    let q = q2.sqrt();
    Ok([(r + q).ln(), 1.0 / q, -r / (q2 * q), (2.0 * r * r + 1.0) / (q2 * q2 * q)])
}

pub fn catenoid_height(r: f64) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::Domain(format!("catenoid arc needs r >= 1, got {r}")));
    }
    Ok(r.acosh())
}

/// Options for the Cauchy continuation of the arc.
#[derive(Debug, Clone, Copy)]
pub struct ContinuationOptions {
    /// coefficient `c` in `f'' + f'/r = c ε^{2s-1} f^{-2s}`
    pub forcing: f64,
    pub per_efold: usize,
    pub tol: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self { forcing: 1.0, per_efold: 250, tol: 1e-10 }
    }
}

/// Solve `f'' + f'/r = ε^{2s-1} f^{-2s}` from `r_ε` with the arc's value and
/// slope there, up to `r_max`.
pub fn continue_f_eps(s: f64, eps: f64, r_max: f64, tol: f64) -> Result<RadialProfile> {
    let sc = Scales::new(s, eps, 0.5)?;
    let grid = log_grid(sc.r_eps, r_max, 250, &[]);
    continue_f_eps_on(&sc, &grid, &ContinuationOptions { tol, ..Default::default() })
}

/// Continuation on a prescribed grid starting at `r_ε = grid[0]`.
pub fn continue_f_eps_on(sc: &Scales, grid: &[f64], opts: &ContinuationOptions) -> Result<RadialProfile> {
    let (s, r0) = (sc.s, sc.r_eps);
    if (grid[0] - r0).abs() > 1e-12 * r0 {
        return Err(Error::Domain("continuation grid must start at r_eps".into()));
    }
    let r_max = *grid.last().unwrap();
    if r_max < 10.0 * sc.unit * (1.0 - 1e-12) {
        return Err(Error::Domain(format!("r_max={r_max} must be at least 10 |log eps| r_eps = {}", 10.0 * sc.unit)));
    }
    if !(opts.tol > 0.0) || !(opts.forcing > 0.0) {
        return Err(Error::Domain("tolerance and forcing must be positive".into()));
    }
    let k = opts.forcing * sc.eps_pow();
    let [f0, d0, _, _] = catenoid_arc(r0)?;
    // t = log r, y = (f, f_t)
    let ts: Vec<f64> = grid[1..].iter().map(|r| r.ln()).collect();
    let ys = integrate(
        |t, y, d| {
            d[0] = y[1];
            d[1] = (2.0 * t).exp() * k * y[0].max(1e-300).powf(-2.0 * s);
        },
        r0.ln(),
        &[f0, r0 * d0],
        &ts,
        &OdeOptions { rtol: opts.tol, atol: opts.tol * 1e-2, ..Default::default() },
        |_, _| true,
    )?;
    let mut f = vec![f0];
    let mut df = vec![d0];
    let mut d2f = vec![k * f0.powf(-2.0 * s) - d0 / r0];
    for (y, &r) in ys.iter().zip(&grid[1..]) {
        let d = y[1] / r;
        f.push(y[0]);
        df.push(d);
        d2f.push(k * y[0].powf(-2.0 * s) - d / r);
    }
    for (i, &d) in df.iter().enumerate() {
        if d < 0.0 {
            return Err(Error::BoundViolation { location: grid[i], detail: format!("f_eps' = {d} < 0") });
        }
    }
    // lower bound on the initial window
    let floor = 0.5 * (2.0 * s - 1.0) * sc.log_eps;
    for (i, &r) in grid.iter().enumerate() {
        if r > sc.unit {
            break;
        }
        if f[i] < floor {
            return Err(Error::BoundViolation { location: r, detail: format!("f_eps = {} below {floor}", f[i]) });
        }
    }
    RadialProfile::new(grid.to_vec(), f, df, d2f)
}

/// Third derivative of a solution of the continuation ODE.
pub fn f_eps_third(s: f64, k: f64, r: f64, f: f64, df: f64, d2f: f64) -> f64 {
    -d2f / r + df / (r * r) - 2.0 * s * k * f.powf(-2.0 * s - 1.0) * df
}

/// Bounds of the continuation on `[r_ε, |log ε| r_ε]` and the far ratio.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ContinuationBounds {
    /// `min f / |log ε|` on the initial window
    pub lower_ratio: f64,
    /// `max f / |log ε|` on the initial window
    pub upper_ratio: f64,
    /// `f(r) / (ε^{(2s-1)/(2s+1)} r^{2/(2s+1)})` at `r = 20 |log ε| r_ε`
    pub far_ratio: f64,
    /// far ratio divided by the self-similar amplitude `(c/β²)^{1/(2s+1)}`
    pub far_ratio_normalized: f64,
    pub min_slope: f64,
}

pub fn continuation_bounds(f: &RadialProfile, sc: &Scales, forcing: f64) -> ContinuationBounds {
    let (mut lo, mut hi, mut min_slope) = (f64::INFINITY, 0.0f64, f64::INFINITY);
    for i in 0..f.len() {
        min_slope = min_slope.min(f.df[i]);
        if f.grid[i] <= sc.unit {
            lo = lo.min(f.f[i] / sc.log_eps);
            hi = hi.max(f.f[i] / sc.log_eps);
        }
    }
    let s = sc.s;
    let beta = growth_exponent(s);
    let r = 20.0 * sc.unit;
    let far_ratio = f.value(r) / (sc.eps.powf((2.0 * s - 1.0) / (2.0 * s + 1.0)) * r.powf(beta));
    ContinuationBounds {
        lower_ratio: lo,
        upper_ratio: hi,
        far_ratio,
        far_ratio_normalized: far_ratio / self_similar_amplitude(s, forcing),
        min_slope,
    }
}

/// `A` with `A r^β` solving `g'' + g'/r = c g^{-2s}`.
pub fn self_similar_amplitude(s: f64, forcing: f64) -> f64 {
    let b = growth_exponent(s);
    (forcing / (b * b)).powf(1.0 / (2.0 * s + 1.0))
}

/// Blended initial profile and the region checks.
#[derive(Debug, Clone)]
pub struct InitialProfile {
    pub scales: Scales,
    pub forcing: f64,
    pub f0: RadialProfile,
    /// continuation on the grid nodes `>= r_ε`
    pub f_eps: RadialProfile,
    pub report: InitialReport,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct InitialReport {
    /// `max |F0 - f_C|` on `[r1, r_ε]`
    pub inner_deviation: f64,
    /// `max |F0 - f_ε|` on `[r_ε + 1, r_max]`
    pub outer_deviation: f64,
    /// smallest `C` with `|F0''| ≤ C (r^{-2} + (|log ε| r_ε^2)^{-1})` on `[r_ε, |log ε| r_ε]`
    pub mid_constant: f64,
    pub bounds: ContinuationBounds,
}

const WINDOW_NODES: usize = 160;

/// Default grid for the radial pipeline on `[r1, r_max]`.
pub fn pipeline_grid(sc: &Scales, r_max: f64, per_efold: usize, extra: &[f64]) -> Vec<f64> {
    let mut marks = vec![sc.r_eps, sc.r_eps + 1.0, sc.tilde_r_eps, sc.unit];
    marks.extend_from_slice(extra);
    // unit-width cut-off windows get a fixed resolution of their own
    marks.extend((1..WINDOW_NODES).map(|i| sc.r_eps + i as f64 / WINDOW_NODES as f64));
    log_grid(R1, r_max, per_efold, &marks)
}

/// `F0 = f_C + χ(r - r_ε)(f_ε - f_C)` on the given grid (which must contain
/// `r_ε`).
pub fn blend_f0_on(sc: &Scales, cutoffs: &CutoffPair, grid: &[f64], opts: &ContinuationOptions) -> Result<InitialProfile> {
    let i0 = grid
        .iter()
        .position(|&r| (r - sc.r_eps).abs() <= 1e-12 * sc.r_eps)
        .ok_or_else(|| Error::Domain("grid must contain r_eps".into()))?;
    let fe = continue_f_eps_on(sc, &grid[i0..], opts)?;
    let n = grid.len();
    let (mut f, mut df, mut d2f) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut inner_dev, mut outer_dev, mut mid_c) = (0.0f64, 0.0f64, 0.0f64);
    for (i, &r) in grid.iter().enumerate() {
        let [c0, c1, c2, _] = catenoid_arc(r)?;
        let (v, d, dd) = if i < i0 {
            (c0, c1, c2)
        } else {
            let (e0, e1, e2) = fe.node(i - i0);
            let (x, x1, x2) = cutoffs.chi3(r - sc.r_eps);
            let (a, a1, a2) = (e0 - c0, e1 - c1, e2 - c2);
            (c0 + x * a, c1 + x1 * a + x * a1, c2 + x2 * a + 2.0 * x1 * a1 + x * a2)
        };
        if r <= sc.r_eps {
            inner_dev = inner_dev.max((v - c0).abs());
        }
        if i >= i0 && r >= sc.r_eps + 1.0 {
            outer_dev = outer_dev.max((v - fe.f[i - i0]).abs());
        }
        if r >= sc.r_eps && r <= sc.unit {
            mid_c = mid_c.max(dd.abs() / (1.0 / (r * r) + 1.0 / (sc.log_eps * sc.r_eps * sc.r_eps)));
        }
        f.push(v);
        df.push(d);
        d2f.push(dd);
    }
    let f0 = RadialProfile::new(grid.to_vec(), f, df, d2f)?;
    let bounds = continuation_bounds(&fe, sc, opts.forcing);
    Ok(InitialProfile {
        scales: *sc,
        forcing: opts.forcing,
        f0,
        f_eps: fe,
        report: InitialReport { inner_deviation: inner_dev, outer_deviation: outer_dev, mid_constant: mid_c, bounds },
    })
}

/// Convenience form on the default grid with unit forcing.
pub fn blend_f0(s: f64, eps: f64, cutoffs: &CutoffPair, r_max: f64) -> Result<InitialProfile> {
    let sc = Scales::new(s, eps, 0.5)?;
    let grid = pipeline_grid(&sc, r_max, 250, &[]);
    blend_f0_on(&sc, cutoffs, &grid, &ContinuationOptions::default())
}

/// Mean curvature operator `(1/r)(r F'/√(1+F'^2))'` of a radial graph.
pub fn graph_mean_curvature(r: f64, d: f64, dd: f64) -> f64 {
    let w2 = 1.0 + d * d;
    dd / (w2 * w2.sqrt()) + d / (r * w2.sqrt())
}

/// Same operator for the neck written as `r = G(z)`:
/// `G''/(1+G'^2)^{3/2} - 1/(G √(1+G'^2))`.
pub fn neck_mean_curvature(g: f64, dg: f64, d2g: f64) -> f64 {
    let w2 = 1.0 + dg * dg;
    d2g / (w2 * w2.sqrt()) - 1.0 / (g * w2.sqrt())
}
