//! Localized energy by stratified Monte Carlo over pairs.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::constants::c_ns;
use crate::error::{Error, Result};
use crate::geometry::ApproxSolutionSpec;
use crate::layer::LayerProfile;
use crate::quad::linear_fit;

/// A scalar field on ℝ³ in rescaled coordinates.
pub trait Field3d: Sync {
    fn value(&self, x: [f64; 3]) -> f64;
    /// Heights `x3` of the zero set at horizontal radius `rho`; used only to
    /// place samples.
    fn interfaces(&self, _rho: f64) -> Vec<f64> {
        Vec::new()
    }
}

impl Field3d for ApproxSolutionSpec {
    fn value(&self, x: [f64; 3]) -> f64 {
        self.eval(x)
    }

    fn interfaces(&self, rho: f64) -> Vec<f64> {
        let m = self.chart.meridian();
        let e = self.eps();
        let t = m.param_of_radius(e * rho);
        let p = m.eval(t);
        if (p.r - e * rho).abs() > 1e-6 * (1.0 + p.r) {
            return Vec::new();
        }
        let h = p.x3 / e;
        vec![-h, h]
    }
}

/// The layer across the plane `x3 = 0`.
#[derive(Debug, Clone)]
pub struct FlatLayer(pub Arc<LayerProfile>);

impl Field3d for FlatLayer {
    fn value(&self, x: [f64; 3]) -> f64 {
        self.0.w(x[2])
    }

    fn interfaces(&self, _rho: f64) -> Vec<f64> {
        vec![0.0]
    }
}

/// A constant field.
#[derive(Debug, Clone, Copy)]
pub struct ConstantField(pub f64);

impl Field3d for ConstantField {
    fn value(&self, _x: [f64; 3]) -> f64 {
        self.0
    }
}

/// Where the first point of each pair is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SampleRegion {
    Ball { radius: f64 },
    /// `ρ ∈ [a, b]`, `|x3| ≤ h`
    Shell { inner: f64, outer: f64, half_height: f64 },
}

impl SampleRegion {
    pub fn contains(&self, x: [f64; 3]) -> bool {
        match *self {
            SampleRegion::Ball { radius } => x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < radius * radius,
            SampleRegion::Shell { inner, outer, half_height } => {
                let r = x[0].hypot(x[1]);
                r >= inner && r < outer && x[2].abs() < half_height
            }
        }
    }

    fn radial(&self) -> (f64, f64) {
        match *self {
            SampleRegion::Ball { radius } => (0.0, radius),
            SampleRegion::Shell { inner, outer, .. } => (inner, outer),
        }
    }

    fn half_height(&self, rho: f64) -> f64 {
        match *self {
            SampleRegion::Ball { radius } => (radius * radius - rho * rho).max(0.0).sqrt(),
            SampleRegion::Shell { half_height, .. } => half_height,
        }
    }
}

/// Which pairs enter the double integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PairDomain {
    /// at least one point in the region
    #[default]
    AtLeastOne,
    /// both points in the region
    BothInside,
}

impl PairDomain {
    /// Multiplicity of a pair whose first point lies in the region.
    fn weight(&self, second_inside: bool) -> f64 {
        match (self, second_inside) {
            (_, true) => 1.0,
            (PairDomain::AtLeastOne, false) => 2.0,
            (PairDomain::BothInside, false) => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McOptions {
    pub samples: usize,
    /// equal-area strata in `|x'|`
    pub strata: usize,
    pub seed: u64,
    /// Cauchy scale of the samples placed around the interfaces
    pub interface_scale: f64,
    /// switch between the inner and outer laws of the pair separation
    pub pair_scale: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { samples: 100_000, strata: 64, seed: 7, interface_scale: 2.0, pair_scale: 1.0 }
    }
}

/// Per-component totals and their covariance.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct McEstimate {
    pub value: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl McEstimate {
    pub fn se(&self, i: usize) -> f64 {
        self.cov[i][i].max(0.0).sqrt()
    }
}

/// One draw: the first point, the pair offset, and the pair weight
/// `4π r² |h|^{-3-2s} / p(r)` (halved for each of the antithetic pair
/// points `x ± h`).
pub(crate) struct Draw {
    pub x: [f64; 3],
    pub h: [f64; 3],
    pub kernel: f64,
}

/// Stratified Monte Carlo of `∫_region g(draw) dx`, where `g` returns
/// `N` components.
pub(crate) fn pair_monte_carlo<const N: usize, I, G>(
    region: SampleRegion,
    interfaces: I,
    s: f64,
    opts: &McOptions,
    g: G,
) -> McEstimate
where
    I: Fn(f64) -> Vec<f64> + Sync,
    G: Fn(&Draw) -> [f64; N] + Sync,
{
    let k = opts.strata.max(1);
    let per = (opts.samples / k).max(2);
    let (ra, rb) = region.radial();
    let s2 = 2.0 * s;
    let a = opts.pair_scale;
    // mixture law of |h|: r^{1-2s} below a, r^{-1-2s} above
    let (m_in, m_out) = (1.0 / (2.0 - s2), 1.0 / s2);
    let p_in = m_in / (m_in + m_out);
    let z = a.powf(2.0 - s2) * (m_in + m_out);
    let ell = opts.interface_scale;

    let strata: Vec<([f64; N], [[f64; N]; N])> = (0..k)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(j as u64));
            let (q0, q1) = (
                ra * ra + (rb * rb - ra * ra) * j as f64 / k as f64,
                ra * ra + (rb * rb - ra * ra) * (j + 1) as f64 / k as f64,
            );
            let mut sum = [0.0; N];
            let mut sq = [[0.0; N]; N];
            for _ in 0..per {
                let u: [f64; 8] = std::array::from_fn(|_| rng.random::<f64>());
                let rho = (q0 + (q1 - q0) * u[0]).sqrt();
                let ang = 2.0 * std::f64::consts::PI * u[1];
                let hh = region.half_height(rho);
                let ifs: Vec<f64> = interfaces(rho).into_iter().filter(|v| v.abs() <= hh + 4.0 * ell).collect();
                let pu = if ifs.is_empty() { 1.0 } else { 0.5 };
                let x3 = if u[2] < pu {
                    -hh + 2.0 * hh * u[3]
                } else {
                    let c = ifs[((u[2] - pu) / (1.0 - pu) * ifs.len() as f64) as usize % ifs.len()];
                    c + ell * (std::f64::consts::PI * (u[3] - 0.5)).tan()
                };
                if !(x3.abs() <= hh) || hh == 0.0 {
                    continue;
                }
                let mut q3 = pu / (2.0 * hh);
                if !ifs.is_empty() {
                    let mix: f64 = ifs
                        .iter()
                        .map(|c| ell / (std::f64::consts::PI * (ell * ell + (x3 - c).powi(2))))
                        .sum();
                    q3 += (1.0 - pu) * mix / ifs.len() as f64;
                }
                let inv_q = std::f64::consts::PI * (q1 - q0) / q3;
                let r = if u[4] < p_in { a * u[5].powf(1.0 / (2.0 - s2)) } else { a * (1.0 - u[5]).powf(-1.0 / s2) };
                let pr = if r <= a { r.powf(1.0 - s2) / z } else { a.powf(1.0 - s2) * (r / a).powf(-1.0 - s2) / z };
                let ct = 2.0 * u[6] - 1.0;
                let st = (1.0 - ct * ct).max(0.0).sqrt();
                let ph = 2.0 * std::f64::consts::PI * u[7];
                let h = [r * st * ph.cos(), r * st * ph.sin(), r * ct];
                let kernel = 4.0 * std::f64::consts::PI * r.powf(-1.0 - s2) / pr;
                let x = [rho * ang.cos(), rho * ang.sin(), x3];
                let v = g(&Draw { x, h, kernel });
                for i in 0..N {
                    let vi = v[i] * inv_q;
                    sum[i] += vi;
                    for l in 0..N {
                        sq[i][l] += vi * v[l] * inv_q;
                    }
                }
            }
            let n = per as f64;
            let mean: [f64; N] = std::array::from_fn(|i| sum[i] / n);
            let cov: [[f64; N]; N] =
                std::array::from_fn(|i| std::array::from_fn(|l| (sq[i][l] / n - mean[i] * mean[l]) / (n - 1.0)));
            (mean, cov)
        })
        .collect();
    let mut value = vec![0.0; N];
    let mut cov = vec![vec![0.0; N]; N];
    for (m, c) in &strata {
        for i in 0..N {
            value[i] += m[i];
            for l in 0..N {
                cov[i][l] += c[i][l];
            }
        }
    }
    McEstimate { value, cov }
}

/// Double-well potential `((1 - u²)/2)²`.
pub fn double_well(u: f64) -> f64 {
    let v = 0.5 * (1.0 - u * u);
    v * v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyOptions {
    pub mc: McOptions,
    pub pairs: PairDomain,
    /// largest accepted standard error relative to the estimate
    pub max_rel_se: f64,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        Self { mc: McOptions::default(), pairs: PairDomain::AtLeastOne, max_rel_se: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub radii: Vec<f64>,
    pub energies: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// slope of `log E_R` against `log R`
    pub fitted_slope: f64,
    pub r_squared: f64,
}

/// `E_R(u) = C(3,s)/4 ∬ (u(x) - u(y))² |x-y|^{-3-2s} + ∫_{B_R} W(u)` over the
/// pairs selected by `opts.pairs`.
pub fn energy_at(u: &dyn Field3d, s: f64, radius: f64, opts: &EnergyOptions) -> Result<(f64, f64)> {
    let region = SampleRegion::Ball { radius };
    let c = 0.25 * c_ns(3, s);
    let est = pair_monte_carlo::<1, _, _>(region, |r| u.interfaces(r), s, &opts.mc, |d| {
        let u0 = u.value(d.x);
        let mut pair = 0.0;
        for sg in [1.0, -1.0] {
            let y = [d.x[0] + sg * d.h[0], d.x[1] + sg * d.h[1], d.x[2] + sg * d.h[2]];
            let m = opts.pairs.weight(region.contains(y));
            if m > 0.0 {
                let du = u0 - u.value(y);
                pair += 0.5 * m * du * du;
            }
        }
        [c * pair * d.kernel + double_well(u0)]
    });
    Ok((est.value[0], est.se(0)))
}

/// Energies over increasing radii and the fitted growth exponent.
pub fn energy_growth(u: &dyn Field3d, s: f64, radii: &[f64], opts: &EnergyOptions) -> Result<EnergyReport> {
    if radii.len() < 4 {
        return Err(Error::Domain("need at least four radii".into()));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(Error::Domain("radii must be positive and increasing".into()));
    }
    if radii[radii.len() - 1] < 8.0 * radii[0] {
        return Err(Error::Domain("radii must span a factor of at least 8".into()));
    }
    let mut energies = Vec::with_capacity(radii.len());
    let mut std_errors = Vec::with_capacity(radii.len());
    for &r in radii {
        let (e, se) = energy_at(u, s, r, opts)?;
        if e != 0.0 && se > opts.max_rel_se * e.abs() {
            return Err(Error::Quadrature(format!(
                "Monte Carlo standard error {se:.3e} exceeds {} of E_R = {e:.3e} at R = {r}",
                opts.max_rel_se
            )));
        }
        energies.push(e);
        std_errors.push(se);
    }
    let (fitted_slope, r_squared) = if energies.iter().all(|&e| e > 0.0) {
        let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
        let ly: Vec<f64> = energies.iter().map(|e| e.ln()).collect();
        let (_, b, r2) = linear_fit(&lx, &ly);
        (b, r2)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(EnergyReport { radii: radii.to_vec(), energies, std_errors, fitted_slope, r_squared })
}
