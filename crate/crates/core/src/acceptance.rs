//! Acceptance criteria as runnable checks with machine-readable verdicts.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constants::{gamma_ratio_identity, plain_kernel_closed_form, quadratic_kernel_closed_form, FracOrder};
use crate::cutoff::CutoffPair;
use crate::error::{Error, Result};
use crate::geometry::{
    curvatures, fermi_coordinates, fermi_jacobian, kernel_expansion_check, neck_mean_curvature, ApproxSolutionSpec,
    FermiChart,
};
use crate::layer::{c_h, c_h_alt, projection_constants, solve_layer_with, LayerOptions, LayerProfile, ProjectionConstants};
use crate::profile::{CatenoidArc, PowerLaw, Radial, RadialProfile};
use crate::pv::{reduce_kernel_integral, KernelMoment, QuadratureScheme};
use crate::quad::{linear_fit, loglog_slope};
use crate::reduced::{
    blend_f0_on, emden_fowler_flow, growth_exponent, kernel_z1, l0_apply, norm_star, norm_star_star, pipeline_grid,
    right_inverse, self_similar_amplitude, solve_reduced, ContinuationOptions, EmdenFowlerState, InitialProfile, LinearContext,
    ReducedOptions, ReducedSolution, Scales, WeightedNormSpec, R1,
};
use crate::verification::{
    audit_error, audit_far_decay, energy_growth, midplane_point, point_at, rayleigh_probe, remainder_slope, DecayField,
    EnergyOptions, FlatLayer, McOptions, NeckBump, RayleighOptions, Region, TestFunction, WindowPolicy,
};

/// Order used by the criteria that fix a single `s`.
pub const S_REF: f64 = 0.75;
/// `ε` values of the error audit.
pub const AUDIT_EPS: [f64; 3] = [2e-2, 1e-2, 5e-3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Kernels,
    Layer,
    Geometry,
    Reduced,
    Error,
    Energy,
    All,
}

impl Suite {
    pub fn criteria(self) -> &'static [u8] {
        match self {
            Suite::Kernels => &[1, 2],
            Suite::Layer => &[3, 4],
            Suite::Geometry => &[5, 6],
            Suite::Reduced => &[7, 8, 9, 10],
            Suite::Error => &[11],
            Suite::Energy => &[12, 13],
            Suite::All => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcceptanceOptions {
    /// looser thresholds and smaller samples
    pub quick: bool,
    pub seed: u64,
}

impl Default for AcceptanceOptions {
    fn default() -> Self {
        Self { quick: false, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    /// failure is reported but does not fail the suite
    pub soft: bool,
    pub seconds: f64,
    pub values: BTreeMap<String, f64>,
    pub detail: String,
}

impl Verdict {
    pub fn line(&self) -> String {
        let tag = match (self.passed, self.soft) {
            (true, _) => "PASS",
            (false, true) => "SOFT-FAIL",
            (false, false) => "FAIL",
        };
        format!("criterion {:>2} {tag:<9} {:<28} {:>8.2}s  {}", self.id, self.name, self.seconds, self.detail)
    }

    /// Counts against the suite.
    pub fn blocking(&self) -> bool {
        !self.passed && !self.soft
    }
}

/// Collects checks for one criterion.
struct Checks {
    values: BTreeMap<String, f64>,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self { values: BTreeMap::new(), failures: Vec::new(), notes: Vec::new() }
    }

    fn value(&mut self, key: &str, v: f64) {
        self.values.insert(key.to_string(), v);
    }

    fn check(&mut self, ok: bool, what: String) {
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn error(&mut self, what: &str, e: impl std::fmt::Display) {
        self.failures.push(format!("{what}: {e}"));
    }
}

/// Shared, lazily computed inputs.
pub struct Acceptance {
    pub opts: AcceptanceOptions,
    layers: [OnceLock<Result<Arc<LayerProfile>>>; 3],
    constants: OnceLock<Result<ProjectionConstants>>,
    /// solutions with their solve time in seconds
    solutions: [OnceLock<Result<(ReducedSolution, f64)>>; 3],
}

const LAYER_S: [f64; 3] = [0.6, 0.75, 0.9];

impl Acceptance {
    pub fn new(opts: AcceptanceOptions) -> Self {
        Self {
            opts,
            layers: Default::default(),
            constants: OnceLock::new(),
            solutions: Default::default(),
        }
    }

    /// Tolerance multiplier.
    fn loose(&self) -> f64 {
        if self.opts.quick {
            10.0
        } else {
            1.0
        }
    }

    fn layer(&self, s: f64) -> Result<Arc<LayerProfile>> {
        let i = LAYER_S.iter().position(|&v| v == s).expect("layer order in the cached set");
        cached(self.layers[i].get_or_init(|| solve_layer_with(FracOrder::new(s)?, &LayerOptions::default()).map(Arc::new)))
            .cloned()
    }

    fn constants(&self) -> Result<ProjectionConstants> {
        cached(self.constants.get_or_init(|| projection_constants(&*self.layer(S_REF)?, &CutoffPair, 20.0))).copied()
    }

    fn timed_solution(&self, eps: f64) -> Result<&(ReducedSolution, f64)> {
        let i = AUDIT_EPS.iter().position(|&v| v == eps).expect("audit epsilon");
        let r = self.solutions[i].get_or_init(|| {
            let opts = ReducedOptions { eps_max: AUDIT_EPS[0], ..Default::default() };
            let pc = self.constants()?;
            let t = Instant::now();
            let sol = solve_reduced(S_REF, eps, &CutoffPair, &pc, 1e-8, &opts)?;
            Ok((sol, t.elapsed().as_secs_f64()))
        });
        cached(r)
    }

    fn solution(&self, eps: f64) -> Result<&ReducedSolution> {
        self.timed_solution(eps).map(|r| &r.0)
    }

    fn approx(&self, eps: f64) -> Result<ApproxSolutionSpec> {
        let chart = FermiChart::from_solution(self.solution(eps)?, 0.1)?;
        ApproxSolutionSpec::new(chart, self.layer(S_REF)?, 10.0, 1.1, 0.25)
    }

    pub fn run(&self, id: u8) -> Verdict {
        let t = Instant::now();
        let mut c = Checks::new();
        let (name, soft) = match id {
            1 => ("gamma identity", false),
            2 => ("kernel reduction", false),
            3 => ("layer profile", false),
            4 => ("curvature weight c_H", false),
            5 => ("catenoid minimality", false),
            6 => ("Fermi consistency", false),
            7 => ("Emden-Fowler flow", false),
            8 => ("kernels and Wronskian", false),
            9 => ("right inverse", false),
            10 => ("reduced solve", false),
            11 => ("error audit", false),
            12 => ("energy growth", false),
            13 => ("instability probe", true),
            _ => ("unknown criterion", false),
        };
        match id {
            1 => self.gamma_identity(&mut c),
            2 => self.kernel_reduction(&mut c),
            3 => self.layer_profile(&mut c),
            4 => self.curvature_weight(&mut c),
            5 => self.catenoid_minimality(&mut c),
            6 => self.fermi_consistency(&mut c),
            7 => self.emden_fowler(&mut c),
            8 => self.kernels_wronskian(&mut c),
            9 => self.right_inverse(&mut c),
            10 => self.reduced_solve(&mut c),
            11 => self.error_audit(&mut c),
            12 => self.energy(&mut c),
            13 => self.instability(&mut c),
            _ => c.failures.push(format!("no criterion {id}")),
        }
        let seconds = t.elapsed().as_secs_f64();
        let limit = match id {
            1 => Some(1.0),
            2 => Some(10.0),
            3 => Some(60.0 * if self.opts.quick { 1.0 } else { LAYER_S.len() as f64 }),
            11 => Some(900.0),
            _ => None,
        };
        if let Some(l) = limit {
            c.check(seconds < l, format!("runtime {seconds:.1}s < {l}s"));
        }
        let passed = c.failures.is_empty();
        let detail = if passed { c.notes.join("; ") } else { c.failures.join("; ") };
        Verdict { id, name, passed, soft, seconds, values: c.values, detail }
    }

    pub fn run_suite(&self, suite: Suite) -> Vec<Verdict> {
        suite.criteria().iter().map(|&id| self.run(id)).collect()
    }

    fn gamma_identity(&self, c: &mut Checks) {
        let mut worst = 0.0f64;
        for k in 0..9 {
            let s = 0.55 + 0.05 * k as f64;
            match gamma_ratio_identity(s) {
                Ok(v) => worst = worst.max((v / (2.0 / (3.0 + 2.0 * s)) - 1.0).abs()),
                Err(e) => return c.error("identity", e),
            }
        }
        c.value("max_rel_error", worst);
        let tol = 1e-12 * self.loose();
        c.check(worst <= tol, format!("max relative error {worst:.1e} <= {tol:.0e}"));
    }

    fn kernel_reduction(&self, c: &mut Checks) {
        let sc = QuadratureScheme::default();
        let mut worst = 0.0f64;
        for s in [0.6, 0.75, 0.9] {
            let o = FracOrder::new(s).expect("order in range");
            for zeta in [0.5, 1.0, 2.0, 4.0] {
                let run = || -> Result<(f64, f64)> {
                    let p = reduce_kernel_integral(KernelMoment::Plain, zeta, o, &sc)?;
                    let q = reduce_kernel_integral(KernelMoment::Quadratic(1), zeta, o, &sc)?;
                    Ok((p, q))
                };
                match run() {
                    Ok((p, q)) => {
                        worst = worst.max((p / plain_kernel_closed_form(zeta, s) - 1.0).abs());
                        worst = worst.max((q / quadratic_kernel_closed_form(zeta, s) - 1.0).abs());
                    }
                    Err(e) => return c.error("reduction", e),
                }
            }
        }
        c.value("max_rel_error", worst);
        let tol = 1e-6 * self.loose();
        c.check(worst <= tol, format!("max relative error {worst:.1e} <= {tol:.0e}"));
    }

    fn layer_profile(&self, c: &mut Checks) {
        let orders: &[f64] = if self.opts.quick { &[S_REF] } else { &LAYER_S };
        for &s in orders {
            let p = match self.layer(s) {
                Ok(p) => p,
                Err(e) => return c.error(&format!("layer s={s}"), e),
            };
            c.value(&format!("residual_sup_s{s}"), p.residual_sup);
            c.value(&format!("tail_exponent_s{s}"), p.tail_exponent);
            let tol = 1e-4 * self.loose();
            c.check(p.residual_sup <= tol, format!("s={s} residual {:.1e} <= {tol:.0e}", p.residual_sup));
            let band = 0.05 * self.loose();
            c.check(
                (p.tail_exponent / (2.0 * s) - 1.0).abs() <= band,
                format!("s={s} tail exponent {:.4} vs {}", p.tail_exponent, 2.0 * s),
            );
            let n = (p.grid.len() - 1) / 2;
            let odd = (0..=n).all(|k| (p.values[n + k] + p.values[n - k]).abs() <= 1e-10);
            let increasing = p.values.windows(2).all(|w| w[1] > w[0]);
            let bounded = p.values.iter().all(|v| v.abs() < 1.0);
            c.check(odd && increasing && bounded, format!("s={s} odd/increasing/bounded"));
        }
    }

    fn curvature_weight(&self, c: &mut Checks) {
        let p = match self.layer(S_REF) {
            Ok(p) => p,
            Err(e) => return c.error("layer", e),
        };
        let sc = p.scheme();
        let run = || -> Result<(f64, f64, f64)> {
            let mut even = 0.0f64;
            for z0 in [0.5, 1.0, 3.0, 7.5] {
                let (a, b) = (c_h(z0, &p, &sc)?, c_h(-z0, &p, &sc)?);
                even = even.max((a - b).abs() / a.abs());
            }
            let mut forms = 0.0f64;
            for z0 in [0.0, 1.0, 5.0, 10.0] {
                let (a, b) = (c_h(z0, &p, &sc)?, c_h_alt(z0, &p, &sc)?);
                forms = forms.max((a - b).abs() / a.abs());
            }
            let zs = [5.0, 10.0, 20.0];
            let v = zs.iter().map(|&z| c_h(z, &p, &sc)).collect::<Result<Vec<_>>>()?;
            Ok((even, forms, loglog_slope(&zs, &v).0))
        };
        match run() {
            Ok((even, forms, slope)) => {
                c.value("evenness", even);
                c.value("form_agreement", forms);
                c.value("decay_slope", slope);
                let l = self.loose();
                c.check(even <= 1e-10 * l, format!("evenness {even:.1e}"));
                c.check(forms <= 1e-5 * l, format!("forms agree to {forms:.1e}"));
                let target = -(2.0 * S_REF - 1.0);
                c.check(
                    (slope / target - 1.0).abs() <= 0.1 * l,
                    format!("decay slope {slope:.3} vs {target}"),
                );
            }
            Err(e) => c.error("c_H", e),
        }
    }

    fn catenoid_minimality(&self, c: &mut Checks) {
        let tol = 1e-10 * self.loose();
        let mut worst = 0.0f64;
        for r in [1.1, 2.0, 10.0, 100.0] {
            match curvatures(&CatenoidArc, r) {
                Ok(d) => worst = worst.max(d.h.abs()),
                Err(e) => return c.error("curvatures", e),
            }
        }
        let mut neck = 0.0f64;
        for z in [0.0, 0.3, 0.88, 2.0] {
            match neck_mean_curvature(|t: f64| (t.cosh(), t.sinh(), t.cosh()), z) {
                Ok(v) => neck = neck.max(v.abs()),
                Err(e) => return c.error("neck form", e),
            }
        }
        c.value("graph_h", worst);
        c.value("neck_h", neck);
        c.check(worst <= tol, format!("|H| on the arc {worst:.1e}"));
        c.check(neck <= tol, format!("neck form {neck:.1e}"));
    }

    fn fermi_consistency(&self, c: &mut Checks) {
        let chart = match self.solution(1e-2).and_then(|s| FermiChart::from_solution(s, 0.1)) {
            Ok(ch) => ch,
            Err(e) => return c.error("chart", e),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        let end = chart.meridian().param_of_radius(50.0);
        let mut round = 0.0f64;
        let mut jac = 0.0f64;
        for _ in 0..100 {
            let theta = end * rng.random::<f64>().powi(2);
            let phi = rng.random_range(-3.0..3.0);
            let z = rng.random_range(-0.9..0.9) * chart.tube_halfwidth;
            let x = chart.map(theta, phi, z);
            let scale = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            match fermi_coordinates(&chart, x) {
                Ok(fp) => {
                    let b = chart.map(fp.theta, fp.phi, fp.z);
                    let d = ((b[0] - x[0]).powi(2) + (b[1] - x[1]).powi(2) + (b[2] - x[2]).powi(2)).sqrt();
                    round = round.max(d / scale).max((fp.z - z).abs() / scale);
                }
                Err(e) => return c.error("fermi_coordinates", e),
            }
            match fermi_jacobian(&chart, theta, z) {
                Ok(j) => {
                    let p = chart.meridian().eval(theta);
                    let area = p.speed() * p.r / (chart.eps * chart.eps);
                    jac = jac.max((j - fd_determinant(&chart, theta, phi, z) / area).abs() / j);
                }
                Err(e) => return c.error("fermi_jacobian", e),
            }
        }
        let tol = 1e-6 * self.loose();
        c.value("round_trip", round);
        c.value("jacobian", jac);
        c.check(round <= tol, format!("round trip {round:.1e}"));
        c.check(jac <= tol, format!("Jacobian vs differences {jac:.1e}"));
        let alpha = 0.25;
        let cat = match FermiChart::catenoid(1.0, 0.1) {
            Ok(ch) => ch,
            Err(e) => return c.error("catenoid chart", e),
        };
        let theta = 3f64.acosh();
        let offsets = [0.2, 0.1, 0.05];
        let mut rem = Vec::new();
        for t in offsets {
            match kernel_expansion_check(&cat, theta, 0.5 * t, -0.5 * t, [0.8 * t, 0.6 * t], S_REF, alpha) {
                Ok(k) => rem.push(k.graph_remainder),
                Err(e) => return c.error("kernel expansion", e),
            }
        }
        let slope = loglog_slope(&offsets, &rem).0;
        c.value("expansion_order", slope);
        c.check(slope >= 2.0 + alpha, format!("expansion remainder order {slope:.2} >= {}", 2.0 + alpha));
    }

    fn emden_fowler(&self, c: &mut Checks) {
        let s = S_REF;
        let tr = match emden_fowler_flow(s, EmdenFowlerState::new(s, 0.0, 1.5, 0.0), 24.0, 1e-3) {
            Ok(t) => t,
            Err(e) => return c.error("flow", e),
        };
        let rise = tr.windows(2).map(|w| w[1].hamiltonian - w[0].hamiltonian).fold(f64::NEG_INFINITY, f64::max);
        c.value("max_hamiltonian_step", rise);
        c.check(rise <= 1e-12, format!("Hamiltonian never increases (max step {rise:.1e})"));
        let (mut ts, mut ls, mut zeros) = (Vec::new(), Vec::new(), Vec::new());
        for w in tr.windows(3) {
            let a = |k: usize| (w[k].h - 1.0).abs();
            if w[1].t > 3.0 && a(1) > a(0) && a(1) >= a(2) && a(1) > 1e-9 {
                ts.push(w[1].t);
                ls.push(a(1).ln());
            }
            let (p, q) = (w[0].h - 1.0, w[1].h - 1.0);
            if w[0].t > 3.0 && p * q < 0.0 {
                zeros.push(w[0].t - p * (w[1].t - w[0].t) / (q - p));
            }
        }
        if ts.len() < 4 || zeros.len() < 3 {
            return c.failures.push("too few oscillations to fit".into());
        }
        let rate = -linear_fit(&ts, &ls).1;
        let spacing = (zeros[zeros.len() - 1] - zeros[0]) / (zeros.len() - 1) as f64;
        let expected = std::f64::consts::PI / (2.0 * s).sqrt();
        c.value("decay_rate", rate);
        c.value("spacing", spacing);
        let l = self.loose();
        c.check((rate - 1.0).abs() <= 0.1 * l, format!("envelope rate {rate:.3}"));
        c.check((spacing / expected - 1.0).abs() <= 0.05 * l, format!("spacing {spacing:.4} vs {expected:.4}"));
    }

    fn unit_context(&self, per_efold: usize) -> Result<(InitialProfile, LinearContext)> {
        let sc = Scales::new(S_REF, 1e-3, 0.5)?;
        let grid = pipeline_grid(&sc, 200.0 * sc.tilde_r_eps, per_efold, &[]);
        let init = blend_f0_on(&sc, &CutoffPair, &grid, &ContinuationOptions { forcing: 1.0, per_efold, tol: 1e-11 })?;
        let ctx = LinearContext::new(&init, CutoffPair)?;
        Ok((init, ctx))
    }

    fn kernels_wronskian(&self, c: &mut Checks) {
        let run = || -> Result<(f64, f64, f64)> {
            let (init, ctx) = self.unit_context(250)?;
            let rt = ctx.scales.tilde_r_eps;
            let k = &ctx.kernels;
            let mut w = k.wronskian_defect;
            for m in [1.0, 2.0, 10.0, 100.0] {
                w = w.max((m * rt * k.wronskian(m * rt) - 1.0).abs());
            }
            // Z₁ of the unit-forcing profile against its linearized equation
            // Z'' + Z'/ρ + 2s g^{-2s-1} Z = 0, by central differences
            let sc = init.scales;
            let g = Rescaled { f: &init.f_eps, unit: sc.unit, log_eps: sc.log_eps };
            let z = |rho: f64| kernel_z1(&g, rho, S_REF);
            let mut res = 0.0f64;
            let mut rho = sc.delta0;
            while rho <= 10.0 {
                let h = 1e-3 * rho;
                let (zm, z0, zp) = (z(rho - h), z(rho), z(rho + h));
                let r = (zp - 2.0 * z0 + zm) / (h * h)
                    + (zp - zm) / (2.0 * h * rho)
                    + 2.0 * S_REF * g.value(rho).powf(-2.0 * S_REF - 1.0) * z0;
                res = res.max(r.abs());
                rho *= 1.07;
            }
            let a = self_similar_amplitude(S_REF, 1.0);
            let p = PowerLaw { a, p: growth_exponent(S_REF) };
            let mut exact = 0.0f64;
            for r in [0.5, 1.0, 7.0, 300.0] {
                exact = exact.max(kernel_z1(&p, r, S_REF).abs() / p.value(r));
            }
            Ok((w, res, exact))
        };
        match run() {
            Ok((w, res, exact)) => {
                let l = self.loose();
                c.value("wronskian_defect", w);
                c.value("z1_residual", res);
                c.value("z1_on_power", exact);
                c.check(w <= 1e-6 * l, format!("|rW - 1| {w:.1e}"));
                c.check(res <= 1e-4 * l, format!("Z1 residual {res:.1e}"));
                c.check(exact <= 1e-10 * l, format!("Z1 on the power solution {exact:.1e}"));
            }
            Err(e) => c.error("kernels", e),
        }
    }

    fn right_inverse(&self, c: &mut Checks) {
        let run = || -> Result<(f64, f64, f64)> {
            let (_, ctx) = self.unit_context(250)?;
            let spec = WeightedNormSpec::standard(R1);
            let mut err = 0.0f64;
            for width in [2.0, 8.0] {
                let psi = manufactured(&ctx, width)?;
                let h = RadialProfile::from_values(ctx.grid().to_vec(), l0_apply(&psi, &ctx)?)?;
                let phi = right_inverse(&h, &ctx)?;
                err = err.max(norm_star(&phi.combine(1.0, &psi, -1.0)?, &spec));
            }
            let ratio = |ctx: &LinearContext| -> Result<f64> {
                let vals: Vec<f64> = ctx.grid().iter().map(|r| r.powi(-2)).collect();
                let h = RadialProfile::from_values(ctx.grid().to_vec(), vals)?;
                Ok(norm_star(&right_inverse(&h, ctx)?, &spec) / norm_star_star(&h, &spec))
            };
            let a = ratio(&ctx)?;
            let b = ratio(&self.unit_context(500)?.1)?;
            Ok((err, a, b))
        };
        match run() {
            Ok((err, a, b)) => {
                let l = self.loose();
                c.value("recovery_error", err);
                c.value("bound_constant", a);
                c.value("bound_constant_refined", b);
                c.check(err <= 1e-4 * l, format!("manufactured recovery {err:.1e}"));
                c.check((b / a - 1.0).abs() <= 0.1 * l, format!("bound constant {a:.3} -> {b:.3} under refinement"));
            }
            Err(e) => c.error("right inverse", e),
        }
    }

    fn reduced_solve(&self, c: &mut Checks) {
        let mut run = || -> Result<()> {
            let (a, ta) = self.timed_solution(1e-2)?;
            let (b, tb) = self.timed_solution(5e-3)?;
            let l = self.loose();
            let slowest = ta.max(*tb);
            c.value("solve_seconds", slowest);
            c.check(slowest < 300.0, format!("slowest solve {slowest:.1}s < 300s"));
            let r = &a.report;
            c.value("contraction_rate", r.contraction_rate);
            c.check(r.contraction_rate < 0.5, format!("contraction rate {:.3}", r.contraction_rate));
            let beta = growth_exponent(S_REF);
            c.value("tail_slope", r.tail_slope);
            c.check((r.tail_slope / beta - 1.0).abs() <= 0.05 * l, format!("tail slope {:.4} vs {beta:.4}", r.tail_slope));
            c.value("inner_deviation", r.inner_deviation);
            c.value("inner_envelope", r.inner_envelope);
            c.check(r.inner_deviation <= r.inner_envelope, format!("inner deviation {:.1e} within envelope", r.inner_deviation));
            let slope =
                (r.residual_norms.mid_curvature / b.report.residual_norms.mid_curvature).ln() / 2f64.ln();
            c.value("mid_slope", slope);
            let target = 2.0 * S_REF - 1.0;
            c.check((slope / target - 1.0).abs() <= 0.15 * l, format!("mid-region slope {slope:.3} vs {target}"));
            Ok(())
        };
        if let Err(e) = run() {
            c.error("reduced solve", e);
        }
    }

    fn error_audit(&self, c: &mut Checks) {
        let mut run = || -> Result<()> {
            let l = self.loose();
            let policy = WindowPolicy::default();
            let near = [(1.0, 0.0), (1.0, 1.0), (2.0, 0.0), (2.0, 1.0), (4.0, 0.5)];
            let mut maxes = Vec::new();
            let mut closed = Vec::new();
            for &e in &AUDIT_EPS {
                let sp = self.approx(e)?;
                let pts: Vec<[f64; 3]> = near.iter().map(|&(r, z)| point_at(&sp.chart, r / e, z)).collect();
                let a = audit_error(&sp, &pts, &policy);
                if let Some(f) = a.iter().find_map(|x| x.flag.clone()) {
                    c.failures.push(format!("near point flagged at eps={e}: {f}"));
                }
                maxes.push(a.iter().map(|x| x.remainder.abs()).fold(0.0, f64::max));
                closed.push(a.iter().map(|x| x.closed_remainder().abs()).fold(0.0, f64::max));
            }
            let near_slope = loglog_slope(&AUDIT_EPS, &maxes).0;
            let closed_slope = loglog_slope(&AUDIT_EPS, &closed).0;
            let target = 2.0 * S_REF;
            c.value("near_slope", near_slope);
            c.value("near_closed_slope", closed_slope);
            c.check(
                (near_slope / target - 1.0).abs() <= 0.15 * l,
                format!("near slope {near_slope:.3} vs {target} (closed {closed_slope:.2})"),
            );

            let e = 1e-2;
            let sp = self.approx(e)?;
            let pts: Vec<[f64; 3]> = [40.0, 80.0, 160.0].iter().map(|r| midplane_point(r / e)).collect();
            let a = audit_error(&sp, &pts, &policy);
            if a.iter().any(|x| x.flag.is_some() || x.location.region != Region::Far) {
                c.failures.push("far midplane point flagged or misclassified".into());
            }
            let heights: Vec<f64> = a.iter().map(|x| sp.chart.leaf_height(x.location.r).unwrap_or(f64::NAN)).collect();
            let far_slope = -remainder_slope(&heights, &a, false);
            let far_closed = -remainder_slope(&heights, &a, true);
            let target = 2.0 * S_REF * sp.tau;
            c.value("far_slope", far_slope);
            c.value("far_closed_slope", far_closed);
            c.check(
                (far_slope / target - 1.0).abs() <= 0.2 * l,
                format!("far slope {far_slope:.3} vs {target:.3} (closed {far_closed:.2})"),
            );

            let radii: Vec<f64> = [40.0, 80.0, 160.0, 320.0].iter().map(|r| r / e).collect();
            let d = audit_far_decay(DecayField::Approx(&sp), &radii, 1.0, &policy)?;
            let wide = audit_far_decay(DecayField::Approx(&sp), &radii, 1.0, &WindowPolicy { factor: 2.0, ..policy })?;
            let expected = 4.0 * S_REF / (2.0 * S_REF + 1.0);
            let x = d.exponent.unwrap_or(f64::NAN);
            let y = wide.exponent.unwrap_or(f64::NAN);
            c.value("decay_exponent", x);
            c.value("decay_exponent_wide", y);
            c.check((x / expected - 1.0).abs() <= 0.15 * l, format!("decay exponent {x:.3} vs {expected}"));
            c.check((y / x - 1.0).abs() <= 0.05 * l, format!("window doubling {x:.3} -> {y:.3}"));
            Ok(())
        };
        if let Err(e) = run() {
            c.error("audit", e);
        }
    }

    fn mc(&self, samples: usize) -> McOptions {
        let n = if self.opts.quick { samples / 5 } else { samples };
        McOptions { samples: n, seed: self.opts.seed, ..Default::default() }
    }

    fn energy(&self, c: &mut Checks) {
        let mut run = || -> Result<()> {
            let l = self.loose();
            let o = EnergyOptions { mc: self.mc(100_000), max_rel_se: 0.05 * l, ..Default::default() };
            let flat = energy_growth(&FlatLayer(self.layer(S_REF)?), S_REF, &[16.0, 32.0, 64.0, 128.0], &o)?;
            c.value("flat_slope", flat.fitted_slope);
            c.check((flat.fitted_slope - 2.0).abs() <= 0.1 * l, format!("flat slope {:.3}", flat.fitted_slope));
            let e = AUDIT_EPS[0];
            let sp = self.approx(e)?;
            let radii: Vec<f64> = [4.0, 8.0, 16.0, 32.0].iter().map(|r| r / e).collect();
            let u = energy_growth(&sp, S_REF, &radii, &o)?;
            c.value("slope", u.fitted_slope);
            c.value("r_squared", u.r_squared);
            let band = 0.2 * l;
            c.check(
                (u.fitted_slope - 2.0).abs() <= band,
                format!("u* slope {:.3} in [{}, {}]", u.fitted_slope, 2.0 - band, 2.0 + band),
            );
            c.check(u.r_squared >= 0.98, format!("R^2 {:.4}", u.r_squared));
            c.check(u.energies.windows(2).all(|w| w[1] >= w[0]), "energies increase with R".into());
            Ok(())
        };
        if let Err(e) = run() {
            c.error("energy", e);
        }
    }

    fn instability(&self, c: &mut Checks) {
        let mut run = || -> Result<()> {
            let e = AUDIT_EPS[0];
            let sp = self.approx(e)?;
            let bumps =
                [0.5, 1.0, 2.0].iter().map(|w| NeckBump::new(&sp, 0.0, w / e, 10.0)).collect::<Result<Vec<_>>>()?;
            let fam: Vec<&dyn TestFunction> = bumps.iter().map(|b| b as &dyn TestFunction).collect();
            let r = rayleigh_probe(&sp, S_REF, &fam, &RayleighOptions { mc: self.mc(200_000) })?;
            c.value("min_quotient", r.min_quotient);
            c.value("std_error", r.se);
            c.check(
                r.certified_negative,
                format!(
                    "min quotient {:.2e} ± {:.1e} at half length {:.0}{}",
                    r.min_quotient,
                    r.se,
                    r.argmin[1],
                    if r.certified_negative { "" } else { " is not below zero by two standard errors" }
                ),
            );
            Ok(())
        };
        if let Err(e) = run() {
            c.error("probe", e);
        }
    }
}

/// `g(ρ) = f(Lρ)/|log ε|`
struct Rescaled<'a> {
    f: &'a RadialProfile,
    unit: f64,
    log_eps: f64,
}

impl Radial for Rescaled<'_> {
    fn eval3(&self, rho: f64) -> (f64, f64, f64) {
        let (v, d, dd) = self.f.eval3(self.unit * rho);
        (v / self.log_eps, d * self.unit / self.log_eps, dd * self.unit * self.unit / self.log_eps)
    }
    fn start(&self) -> f64 {
        self.f.grid[0] / self.unit
    }
}

/// A cached outcome; failures are reported again with their message.
fn cached<T>(r: &Result<T>) -> Result<&T> {
    r.as_ref().map_err(|e| Error::NonConvergence(e.to_string()))
}

/// `|det DΦ|` by central differences of the chart map.
fn fd_determinant(chart: &FermiChart, theta: f64, phi: f64, z: f64) -> f64 {
    let h = [1e-6 * (1.0 + theta), 1e-6, 1e-6 * (1.0 + z.abs())];
    let col = |j: usize| {
        let mut p = [theta, phi, z];
        let mut m = p;
        p[j] += h[j];
        m[j] -= h[j];
        let a = chart.map(p[0], p[1], p[2]);
        let b = chart.map(m[0], m[1], m[2]);
        [(a[0] - b[0]) / (2.0 * h[j]), (a[1] - b[1]) / (2.0 * h[j]), (a[2] - b[2]) / (2.0 * h[j])]
    };
    let (a, b, c) = (col(0), col(1), col(2));
    (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])).abs()
}

/// `ψ = x² e^{-x/w}`, `x = r - r₁`: vanishes with its slope at the matching
/// point and decays fast.
fn manufactured(ctx: &LinearContext, width: f64) -> Result<RadialProfile> {
    let r1 = ctx.grid()[0];
    let (mut a, mut b, mut d) = (vec![], vec![], vec![]);
    for &r in ctx.grid() {
        let x = r - r1;
        let e = (-x / width).exp();
        a.push(x * x * e);
        b.push((2.0 * x - x * x / width) * e);
        d.push((2.0 - 4.0 * x / width + x * x / (width * width)) * e);
    }
    RadialProfile::new(ctx.grid().to_vec(), a, b, d)
}
