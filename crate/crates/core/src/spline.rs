//! Clamped cubic splines on non-uniform grids.

use crate::error::{Error, Result};

/// Piecewise cubic `a + b t + c t^2 + d t^3`, `t = x - x_j` on `[x_j, x_{j+1}]`.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    pub x: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

/// Second derivatives of the clamped spline through `(x, y)` with end
/// slopes `s0`, `s1`.
pub fn clamped_second_derivatives(x: &[f64], y: &[f64], s0: f64, s1: f64) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    // tridiagonal system: sub `l`, diag `m`, super `u`, rhs `r`
    let mut l = vec![0.0; n];
    let mut m = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut r = vec![0.0; n];
    m[0] = h[0] / 3.0;
    u[0] = h[0] / 6.0;
    r[0] = (y[1] - y[0]) / h[0] - s0;
    for i in 1..n - 1 {
        l[i] = h[i - 1] / 6.0;
        m[i] = (h[i - 1] + h[i]) / 3.0;
        u[i] = h[i] / 6.0;
        r[i] = (y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1];
    }
    l[n - 1] = h[n - 2] / 6.0;
    m[n - 1] = h[n - 2] / 3.0;
    r[n - 1] = s1 - (y[n - 1] - y[n - 2]) / h[n - 2];
    // Thomas algorithm
    for i in 1..n {
        let w = l[i] / m[i - 1];
        m[i] -= w * u[i - 1];
        r[i] -= w * r[i - 1];
    }
    let mut out = vec![0.0; n];
    out[n - 1] = r[n - 1] / m[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = (r[i] - u[i] * out[i + 1]) / m[i];
    }
    out
}

impl CubicSpline {
    pub fn clamped(x: &[f64], y: &[f64], s0: f64, s1: f64) -> Result<Self> {
        if x.len() < 3 || x.len() != y.len() {
            return Err(Error::Domain("spline needs at least 3 matching nodes".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("spline nodes must be strictly increasing".into()));
        }
        let m = clamped_second_derivatives(x, y, s0, s1);
        let k = x.len() - 1;
        let (mut a, mut b, mut c, mut d) = (Vec::with_capacity(k), Vec::with_capacity(k), Vec::with_capacity(k), Vec::with_capacity(k));
        for j in 0..k {
            let h = x[j + 1] - x[j];
            a.push(y[j]);
            b.push((y[j + 1] - y[j]) / h - h * (2.0 * m[j] + m[j + 1]) / 6.0);
            c.push(m[j] / 2.0);
            d.push((m[j + 1] - m[j]) / (6.0 * h));
        }
        Ok(Self { x: x.to_vec(), a, b, c, d })
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        *self.x.last().unwrap()
    }

    /// Interval index containing `x` (clamped to the ends).
    pub fn locate(&self, x: f64) -> usize {
        let k = self.a.len();
        match self.x.partition_point(|&v| v <= x) {
            0 => 0,
            p if p > k => k - 1,
            p => p - 1,
        }
    }

    /// Value and first two derivatives.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let j = self.locate(x);
        let t = x - self.x[j];
        let (a, b, c, d) = (self.a[j], self.b[j], self.c[j], self.d[j]);
        (a + t * (b + t * (c + t * d)), b + t * (2.0 * c + 3.0 * d * t), 2.0 * c + 6.0 * d * t)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let j = self.locate(x);
        let t = x - self.x[j];
        self.a[j] + t * (self.b[j] + t * (self.c[j] + t * self.d[j]))
    }

    /// Slope at every node.
    pub fn node_slopes(&self) -> Vec<f64> {
        let k = self.a.len();
        let mut out = self.b.clone();
        let h = self.x[k] - self.x[k - 1];
        out.push(self.b[k - 1] + h * (2.0 * self.c[k - 1] + 3.0 * self.d[k - 1] * h));
        out
    }

    /// Second derivative at every node.
    pub fn node_curvatures(&self) -> Vec<f64> {
        let k = self.a.len();
        let mut out: Vec<f64> = self.c.iter().map(|c| 2.0 * c).collect();
        let h = self.x[k] - self.x[k - 1];
        out.push(2.0 * self.c[k - 1] + 6.0 * self.d[k - 1] * h);
        out
    }
}

/// Cubic Hermite interpolation from values and slopes.
#[derive(Debug, Clone)]
pub struct Hermite {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

impl Hermite {
    pub fn new(x: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Self {
        Self { x, y, dy }
    }

    fn locate(&self, x: f64) -> usize {
        let k = self.x.len() - 1;
        match self.x.partition_point(|&v| v <= x) {
            0 => 0,
            p if p > k => k - 1,
            p => p - 1,
        }
    }

    /// Value, first and second derivative.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let j = self.locate(x);
        let h = self.x[j + 1] - self.x[j];
        let t = (x - self.x[j]) / h;
        let (y0, y1) = (self.y[j], self.y[j + 1]);
        let (m0, m1) = (self.dy[j] * h, self.dy[j + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1;
        let d1 = (6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * y1 + (3.0 * t2 - 2.0 * t) * m1;
        let d2 = (12.0 * t - 6.0) * y0 + (6.0 * t - 4.0) * m0 + (-12.0 * t + 6.0) * y1 + (6.0 * t - 2.0) * m1;
        (v, d1 / h, d2 / (h * h))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval3(x).0
    }
}

/// Quintic Hermite interpolation from values and two derivatives; C² across
/// nodes.
pub fn quintic_hermite(x0: f64, x1: f64, p0: (f64, f64, f64), p1: (f64, f64, f64), x: f64) -> (f64, f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let (y0, d0, s0) = (p0.0, p0.1 * h, p0.2 * h * h);
    let (y1, d1, s1) = (p1.0, p1.1 * h, p1.2 * h * h);
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let v = h0 * y0 + h1 * d0 + h2 * s0 + h3 * s1 + h4 * d1 + h5 * y1;
    let dh0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let dh1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let dh2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let dh3 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    let dh4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let dh5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let dv = dh0 * y0 + dh1 * d0 + dh2 * s0 + dh3 * s1 + dh4 * d1 + dh5 * y1;
    let ddh0 = -60.0 * t + 180.0 * t2 - 120.0 * t3;
    let ddh1 = -36.0 * t + 96.0 * t2 - 60.0 * t3;
    let ddh2 = 0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3);
    let ddh3 = 0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3);
    let ddh4 = -24.0 * t + 84.0 * t2 - 60.0 * t3;
    let ddh5 = 60.0 * t - 180.0 * t2 + 120.0 * t3;
    let ddv = ddh0 * y0 + ddh1 * d0 + ddh2 * s0 + ddh3 * s1 + ddh4 * d1 + ddh5 * y1;
    (v, dv / h, ddv / (h * h))
}
