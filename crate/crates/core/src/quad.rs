//! Composite and adaptive Gauss rules shared by the integral operators.

use crate::error::{Error, Result};
use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

/// Gauss-Legendre rule on `[-1, 1]` as parallel node/weight vectors.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn legendre(n: usize) -> Self {
        let gl = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
        let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + h * x, w * h))
    }
}

pub fn gl8() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| Rule::legendre(8))
}

pub fn gl16() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| Rule::legendre(16))
}

pub fn gl32() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| Rule::legendre(32))
}

/// Pairwise (tree) summation; the order depends only on the length.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Breakpoints `a = t_0 < ... < t_m = b` growing geometrically from `a`
/// with first width `h0` and ratio `q`; widths are capped at `hmax`.
pub fn graded_breaks(a: f64, b: f64, h0: f64, q: f64, hmax: f64) -> Vec<f64> {
    let mut out = vec![a];
    let mut h = h0;
    let mut t = a;
    while t < b {
        let next = (t + h.min(hmax)).min(b);
        if b - next < 0.25 * h.min(hmax) {
            out.push(b);
            break;
        }
        out.push(next);
        t = next;
        h *= q;
    }
    if *out.last().unwrap() != b {
        out.push(b);
    }
    out
}

/// Breakpoints on `[a, b]` clustered geometrically toward `a`:
/// `a + (b-a) q^{-k}` down to `a + floor`.
pub fn toward_left(a: f64, b: f64, q: f64, floor: f64) -> Vec<f64> {
    let mut pts = vec![b];
    let mut w = b - a;
    while w / q > floor {
        w /= q;
        pts.push(a + w);
    }
    pts.push(a);
    pts.reverse();
    pts
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod 7/15 estimate: (kronrod value, |kronrod - gauss|).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        rk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            rg += WG[j / 2] * (f1 + f2);
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// Adaptive bisection with the 7/15 pair. Intervals are processed in a
/// fixed order so the result is reproducible.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut parts: Vec<(f64, f64, f64, f64)> = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            let vals: Vec<f64> = parts.iter().map(|p| p.2).collect();
            return Ok(pairwise_sum(&vals));
        }
        if parts.len() >= max_intervals {
            return Err(Error::Quadrature(format!(
                "adaptive rule on [{a},{b}] stalled at error {err:.3e} (value {total:.6e})"
            )));
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, _, _) = parts[idx];
        let m = 0.5 * (pa + pb);
        let (v1, e1) = gk15(&mut f, pa, m);
        let (v2, e2) = gk15(&mut f, m, pb);
        parts[idx] = (pa, m, v1, e1);
        parts.insert(idx + 1, (m, pb, v2, e2));
    }
}

/// Composite Gauss rule over consecutive breakpoints.
pub fn composite<F: FnMut(f64) -> f64>(rule: &Rule, breaks: &[f64], mut f: F) -> f64 {
    let vals: Vec<f64> = breaks.windows(2).map(|w| rule.integrate(w[0], w[1], &mut f)).collect();
    pairwise_sum(&vals)
}

/// Cumulative trapezoid-free integral on a grid using cubic Hermite data
/// (values and derivatives at nodes). Returns `∫_{x_0}^{x_i}` for each i.
pub fn cumulative_hermite(x: &[f64], f: &[f64], df: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    out.push(0.0);
    let mut acc = 0.0;
    for i in 1..x.len() {
        let h = x[i] - x[i - 1];
        acc += h * (f[i - 1] + f[i]) / 2.0 + h * h * (df[i - 1] - df[i]) / 12.0;
        out.push(acc);
    }
    out
}

/// Least-squares line `y = a + b x`; returns (a, b, r^2).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (my - slope * mx, slope, r2)
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let (_, b, r2) = linear_fit(&lx, &ly);
    (b, r2)
}
