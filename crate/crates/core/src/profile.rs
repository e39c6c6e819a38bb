//! Radial interface profiles `x3 = F(r)` and the neck inverse `r = G(x3)`.

use crate::error::{Error, Result};
use crate::spline::{quintic_hermite, CubicSpline};

/// A radial function with two derivatives.
pub trait Radial: Sync + Send {
    /// `(F, F', F'')` at `r`.
    fn eval3(&self, r: f64) -> (f64, f64, f64);
    /// Left end of the domain.
    fn start(&self) -> f64;
    fn value(&self, r: f64) -> f64 {
        self.eval3(r).0
    }
}

/// Power-law far-field model `A r^β + B r^{-(2s-1)/(2s+1)}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PowerTail {
    pub a: f64,
    pub b: f64,
    pub growth: f64,
    pub decay: f64,
}

impl PowerTail {
    pub fn for_order(s: f64, a: f64, b: f64) -> Self {
        Self { a, b, growth: 2.0 / (2.0 * s + 1.0), decay: (2.0 * s - 1.0) / (2.0 * s + 1.0) }
    }

    pub fn eval3(&self, r: f64) -> (f64, f64, f64) {
        let (g, d) = (self.growth, self.decay);
        let p = self.a * r.powf(g);
        let q = self.b * r.powf(-d);
        (p + q, (g * p - d * q) / r, (g * (g - 1.0) * p + d * (d + 1.0) * q) / (r * r))
    }

    /// Coefficients matching value and slope at `r`.
    pub fn matching(s: f64, r: f64, f: f64, df: f64) -> Self {
        let g = 2.0 / (2.0 * s + 1.0);
        let d = (2.0 * s - 1.0) / (2.0 * s + 1.0);
        // f = u + v, r f' = g u - d v with u = a r^g, v = b r^{-d}
        let u = (r * df + d * f) / (g + d);
        let v = f - u;
        Self::for_order(s, u / r.powf(g), v * r.powf(d))
    }

    /// Least-squares fit of the two coefficients on sampled values.
    pub fn fit(s: f64, r: &[f64], f: &[f64]) -> Self {
        let g = 2.0 / (2.0 * s + 1.0);
        let d = (2.0 * s - 1.0) / (2.0 * s + 1.0);
        let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in r.iter().zip(f) {
            // relative weighting so the large radii do not dominate
            let wgt = 1.0 / (y * y).max(1e-300);
            let (u, v) = (x.powf(g), x.powf(-d));
            s11 += wgt * u * u;
            s12 += wgt * u * v;
            s22 += wgt * v * v;
            b1 += wgt * u * y;
            b2 += wgt * v * y;
        }
        let det = s11 * s22 - s12 * s12;
        Self::for_order(s, (b1 * s22 - b2 * s12) / det, (s11 * b2 - s12 * b1) / det)
    }
}

/// Sampled profile with values and two derivatives at the nodes; evaluated
/// by quintic Hermite interpolation (C²) and continued by the tail model.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RadialProfile {
    pub r1: f64,
    pub grid: Vec<f64>,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    pub d2f: Vec<f64>,
    pub tail: Option<PowerTail>,
}

impl RadialProfile {
    pub fn new(grid: Vec<f64>, f: Vec<f64>, df: Vec<f64>, d2f: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if n < 3 || f.len() != n || df.len() != n || d2f.len() != n {
            return Err(Error::Domain("profile arrays must share a length of at least 3".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("profile grid must be strictly increasing".into()));
        }
        Ok(Self { r1: grid[0], grid, f, df, d2f, tail: None })
    }

    /// Sample a radial function on a grid.
    pub fn sample<R: Radial + ?Sized>(src: &R, grid: &[f64]) -> Result<Self> {
        let (mut f, mut df, mut d2f) = (Vec::new(), Vec::new(), Vec::new());
        for &r in grid {
            let (a, b, c) = src.eval3(r);
            f.push(a);
            df.push(b);
            d2f.push(c);
        }
        Self::new(grid.to_vec(), f, df, d2f)
    }

    /// From nodal values only; derivatives come from a clamped spline whose
    /// end slopes are those of the parabola through the three end nodes.
    pub fn from_values(grid: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if n < 4 || f.len() != n {
            return Err(Error::Domain("need at least 4 nodes with matching values".into()));
        }
        let s0 = end_slope([grid[0], grid[1], grid[2]], [f[0], f[1], f[2]]);
        let s1 = end_slope([grid[n - 1], grid[n - 2], grid[n - 3]], [f[n - 1], f[n - 2], f[n - 3]]);
        let sp = CubicSpline::clamped(&grid, &f, s0, s1)?;
        let df = sp.node_slopes();
        let d2f = sp.node_curvatures();
        Self::new(grid, f, df, d2f)
    }

    pub fn with_tail(mut self, tail: PowerTail) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn r_out(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Index `j` with `grid[j] <= r < grid[j+1]` (clamped).
    pub fn locate(&self, r: f64) -> usize {
        let k = self.grid.len() - 1;
        match self.grid.partition_point(|&v| v <= r) {
            0 => 0,
            p if p > k => k - 1,
            p => p - 1,
        }
    }

    pub fn node(&self, i: usize) -> (f64, f64, f64) {
        (self.f[i], self.df[i], self.d2f[i])
    }

    /// Linear combination `a·self + b·other` on a shared grid.
    pub fn combine(&self, a: f64, other: &RadialProfile, b: f64) -> Result<RadialProfile> {
        if self.grid != other.grid {
            return Err(Error::Domain("profiles live on different grids".into()));
        }
        let mix = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| a * x + b * y).collect::<Vec<_>>();
        RadialProfile::new(self.grid.clone(), mix(&self.f, &other.f), mix(&self.df, &other.df), mix(&self.d2f, &other.d2f))
    }

    pub fn zeros_like(&self) -> RadialProfile {
        let n = self.grid.len();
        RadialProfile { r1: self.r1, grid: self.grid.clone(), f: vec![0.0; n], df: vec![0.0; n], d2f: vec![0.0; n], tail: None }
    }
}

/// Derivative at `x[0]` of the parabola through three points.
fn end_slope(x: [f64; 3], y: [f64; 3]) -> f64 {
    let (a, b) = (x[1] - x[0], x[2] - x[0]);
    y[0] * (-(a + b) / (a * b)) + y[1] * (b / (a * (b - a))) - y[2] * (a / (b * (b - a)))
}

impl Radial for RadialProfile {
    fn eval3(&self, r: f64) -> (f64, f64, f64) {
        let r_out = self.r_out();
        if r > r_out {
            if let Some(t) = &self.tail {
                return t.eval3(r);
            }
        }
        let j = self.locate(r);
        quintic_hermite(self.grid[j], self.grid[j + 1], self.node(j), self.node(j + 1), r)
    }
    fn start(&self) -> f64 {
        self.r1
    }
}

/// `f_C(r) = arccosh r`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CatenoidArc;

impl Radial for CatenoidArc {
    fn eval3(&self, r: f64) -> (f64, f64, f64) {
        let q = (r * r - 1.0).sqrt();
        ((r + q).ln(), 1.0 / q, -r / (q * q * q))
    }
    fn start(&self) -> f64 {
        1.0
    }
}

/// `A r^p`.
#[derive(Debug, Clone, Copy)]
pub struct PowerLaw {
    pub a: f64,
    pub p: f64,
}

impl Radial for PowerLaw {
    fn eval3(&self, r: f64) -> (f64, f64, f64) {
        let v = self.a * r.powf(self.p);
        (v, self.p * v / r, self.p * (self.p - 1.0) * v / (r * r))
    }
    fn start(&self) -> f64 {
        0.0
    }
}

/// Constant height (a flat plane).
#[derive(Debug, Clone, Copy)]
pub struct Flat(pub f64);

impl Radial for Flat {
    fn eval3(&self, _r: f64) -> (f64, f64, f64) {
        (self.0, 0.0, 0.0)
    }
    fn start(&self) -> f64 {
        0.0
    }
}

/// `F_ε(r) = ε^{-1} F(ε r)`.
pub struct Rescaled<'a, R: Radial + ?Sized> {
    pub inner: &'a R,
    pub eps: f64,
}

impl<R: Radial + ?Sized> Radial for Rescaled<'_, R> {
    fn eval3(&self, r: f64) -> (f64, f64, f64) {
        let (f, d, dd) = self.inner.eval3(self.eps * r);
        (f / self.eps, d, self.eps * dd)
    }
    fn start(&self) -> f64 {
        self.inner.start() / self.eps
    }
}

/// Neck part `r = G(x3)` on `[0, z1]`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct NeckProfile {
    pub grid: Vec<f64>,
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    pub d2g: Vec<f64>,
    pub r1: f64,
    pub z1: f64,
    /// `G'(z1)`
    pub slope_at_z1: f64,
}

impl NeckProfile {
    pub fn eval3(&self, z: f64) -> (f64, f64, f64) {
        let k = self.grid.len() - 1;
        let j = match self.grid.partition_point(|&v| v <= z) {
            0 => 0,
            p if p > k => k - 1,
            p => p - 1,
        };
        quintic_hermite(
            self.grid[j],
            self.grid[j + 1],
            (self.g[j], self.dg[j], self.d2g[j]),
            (self.g[j + 1], self.dg[j + 1], self.d2g[j + 1]),
            z,
        )
    }
}
