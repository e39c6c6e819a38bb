use super::{EPS_MAX, 
    blend_f0_on, catenoid_arc, graph_mean_curvature, neck_mean_curvature, norm_star, pipeline_grid, right_inverse,
    l0_apply, ContinuationOptions, InitialProfile, LinearContext, Scales, WeightedNormSpec, R1,
};
use crate::cutoff::CutoffPair;
use crate::error::{Error, Result};
use crate::layer::ProjectionConstants;
use crate::ode::{integrate_to, OdeOptions};
use crate::profile::{NeckProfile, PowerTail, Radial, RadialProfile};
use crate::quad::loglog_slope;

/// Right-hand side of the graph equation on the middle region.
#[derive(Debug, Clone, Default)]
pub enum MidForcing {
    /// minimal-surface equation
    Zero,
    /// `C̄0 ε^{2s-1} F^{-2s}`, the leading leaf interaction
    #[default]
    LeafInteraction,
    /// externally sampled values, interpolated; zero outside the samples
    Sampled(RadialProfile),
}

impl MidForcing {
    fn eval(&self, r: f64, f: f64, k: f64, s: f64) -> f64 {
        match self {
            MidForcing::Zero => 0.0,
            MidForcing::LeafInteraction => k * f.powf(-2.0 * s),
            MidForcing::Sampled(p) => {
                if r < p.grid[0] || r > p.r_out() {
                    0.0
                } else {
                    p.value(r)
                }
            }
        }
    }

    /// Derivative in `F`, used nowhere in the iteration but handy for
    /// linearization checks.
    pub fn d_height(&self, f: f64, k: f64, s: f64) -> f64 {
        match self {
            MidForcing::LeafInteraction => -2.0 * s * k * f.powf(-2.0 * s - 1.0),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReducedOptions {
    pub delta0: f64,
    /// `R̄`: the middle region ends around `4 R̄`
    pub r_bar: f64,
    /// outer radius as a multiple of `r̃_ε`
    pub r_out_factor: f64,
    pub per_efold: usize,
    pub max_iter: usize,
    pub norm: WeightedNormSpec,
    pub mid_forcing: MidForcing,
    /// under-relax when the raw contraction estimate exceeds this
    pub damping_threshold: f64,
    pub damping: f64,
    pub neck_nodes: usize,
    /// upper bound on `ε`, at most [`EPS_COARSE`]
    pub eps_max: f64,
}

impl Default for ReducedOptions {
    fn default() -> Self {
        Self {
            delta0: 0.5,
            r_bar: 10.0,
            r_out_factor: 200.0,
            per_efold: 250,
            max_iter: 60,
            norm: WeightedNormSpec::standard(R1),
            mid_forcing: MidForcing::LeafInteraction,
            damping_threshold: 0.9,
            damping: 0.5,
            neck_nodes: 400,
            eps_max: EPS_MAX,
        }
    }
}

/// The nonlinear operator whose zero is sought: graph equation up to
/// `4R̄`, far equation beyond, glued by a smooth switch.
#[derive(Debug, Clone)]
pub struct ReducedOperator {
    pub s: f64,
    /// `C̄0 ε^{2s-1}`
    pub k: f64,
    pub r_switch: f64,
    pub mid: MidForcing,
    pub cutoffs: CutoffPair,
}

impl ReducedOperator {
    pub fn mid_residual(&self, r: f64, f: (f64, f64, f64)) -> f64 {
        graph_mean_curvature(r, f.1, f.2) - self.mid.eval(r, f.0, self.k, self.s)
    }

    pub fn far_residual(&self, r: f64, f: (f64, f64, f64)) -> f64 {
        f.2 + f.1 / r - self.k * f.0.powf(-2.0 * self.s)
    }

    pub fn eval(&self, r: f64, f: (f64, f64, f64)) -> f64 {
        let x = self.cutoffs.chi(r - self.r_switch);
        (1.0 - x) * self.mid_residual(r, f) + x * self.far_residual(r, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ResidualNorms {
    /// neck equation, sup over interval midpoints of `[0, z1]`
    pub neck: f64,
    /// `sup |M[F] - N1[F]|` on `[r1, 4R̄]`, midpoints
    pub mid_equation: f64,
    /// `sup |M[F]|` on `[r1, 4R̄]`; equals the forcing size at a solution
    pub mid_curvature: f64,
    /// `sup |ΔF - C̄0 ε^{2s-1}F^{-2s}| / (ε^{2s-1} F0^{-2s})` beyond `4R̄+1`
    pub far_relative: f64,
    pub matching_height: f64,
    pub matching_slope: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ReducedReport {
    pub s: f64,
    pub eps: f64,
    pub r1: f64,
    pub z1: f64,
    pub r_eps: f64,
    pub tilde_r_eps: f64,
    #[serde(rename = "C_bar")]
    pub c_bar: f64,
    #[serde(rename = "C_bar_pm")]
    pub c_bar_pm: f64,
    pub forcing: f64,
    pub iterations: usize,
    pub contraction_rate: f64,
    pub contraction_history: Vec<f64>,
    pub damped: bool,
    /// stopped at the round-off floor rather than at `tol`
    pub stalled: bool,
    pub phi_norm: f64,
    pub residual_norms: ResidualNorms,
    /// least-squares far-field fit on `[10 r̃_ε, R_out]`
    pub tail_fit: PowerTail,
    pub tail_slope: f64,
    /// `sup_{r ≤ r_ε} |F - f_C|`
    pub inner_deviation: f64,
    /// `‖φ‖_* sup_{r ≤ r_ε} r^{2-γ}`
    pub inner_envelope: f64,
    pub wronskian_defect: f64,
}

#[derive(Debug, Clone)]
pub struct ReducedSolution {
    pub neck: NeckProfile,
    pub profile: RadialProfile,
    pub correction: RadialProfile,
    pub initial: InitialProfile,
    pub report: ReducedReport,
}

/// `r = G(z)` with `G'' = (1+G'^2)/G`, `G(0) = 1`, `G'(0) = 0` on `[0, z1]`.
pub fn solve_neck(z_end: f64, nodes: usize) -> Result<NeckProfile> {
    if nodes < 4 || !(z_end > 0.0) {
        return Err(Error::Domain("neck needs a positive height and at least 4 nodes".into()));
    }
    let grid: Vec<f64> = (0..nodes).map(|i| z_end * i as f64 / (nodes - 1) as f64).collect();
    let ys = integrate_to(
        |_, y, d| {
            d[0] = y[1];
            d[1] = (1.0 + y[1] * y[1]) / y[0];
        },
        0.0,
        &[1.0, 0.0],
        &grid[1..],
        &OdeOptions { rtol: 1e-13, atol: 1e-15, ..Default::default() },
    )?;
    let mut g = vec![1.0];
    let mut dg = vec![0.0];
    for y in &ys {
        g.push(y[0]);
        dg.push(y[1]);
    }
    let d2g: Vec<f64> = g.iter().zip(&dg).map(|(a, b)| (1.0 + b * b) / a).collect();
    let slope = *dg.last().unwrap();
    Ok(NeckProfile { r1: *g.last().unwrap(), z1: z_end, slope_at_z1: slope, grid, g, dg, d2g })
}

/// Relative update size below which further progress is round-off.
const STALL_LEVEL: f64 = 1e-4;
/// Updates this far below the first one no longer inform the rate.
const NOISE_LEVEL: f64 = 1e-4;

fn max_over<F: Fn(f64) -> Option<f64>>(grid: &[f64], f: F) -> f64 {
    grid.windows(2).filter_map(|w| f(0.5 * (w[0] + w[1]))).fold(0.0, f64::max)
}

/// Solve the reduced equation for the interface: neck `G` on `[0, z1]` and
/// graph `F = F0 + φ` on `[r1, R_out]`, with `φ = T(L0 φ - E[F0 + φ])`.
pub fn solve_reduced(
    s: f64,
    eps: f64,
    cutoffs: &CutoffPair,
    constants: &ProjectionConstants,
    tol: f64,
    opts: &ReducedOptions,
) -> Result<ReducedSolution> {
    if !(tol > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    if !(constants.c_bar > 0.0 && constants.c_bar_pm > 0.0) {
        return Err(Error::Config("projection constants must be positive".into()));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::Config("damping must lie in (0, 1]".into()));
    }
    let sc = Scales::with_limit(s, eps, opts.delta0, opts.eps_max)?;
    let forcing = constants.forcing();
    let r_switch = 4.0 * opts.r_bar;
    let r_out = opts.r_out_factor * sc.tilde_r_eps;
    if !(r_out >= 10.0 * sc.unit && r_out > r_switch + 2.0) {
        return Err(Error::Config(format!("outer radius {r_out} too small")));
    }
    let switch_marks: Vec<f64> = (0..=160).map(|i| r_switch + i as f64 / 160.0).collect();
    let grid = pipeline_grid(&sc, r_out, opts.per_efold, &switch_marks);
    let cont = ContinuationOptions { forcing, per_efold: opts.per_efold, tol: 1e-11 };
    let init = blend_f0_on(&sc, cutoffs, &grid, &cont)?;
    let ctx = LinearContext::new(&init, *cutoffs)?;
    let op = ReducedOperator { s, k: forcing * sc.eps_pow(), r_switch, mid: opts.mid_forcing.clone(), cutoffs: *cutoffs };
    let f0 = &init.f0;

    let residual_vec = |phi: &RadialProfile| -> Result<Vec<f64>> {
        let lin = l0_apply(phi, &ctx)?;
        Ok((0..grid.len())
            .map(|i| {
                let (a, b, c) = f0.node(i);
                let (p, dp, ddp) = phi.node(i);
                lin[i] - op.eval(grid[i], (a + p, b + dp, c + ddp))
            })
            .collect())
    };

    let mut phi = f0.zeros_like();
    let mut history = Vec::new();
    let mut diffs = Vec::new();
    let mut prev_diff = f64::NAN;
    let mut theta = 1.0;
    let mut damped = false;
    let mut iterations = 0;
    let mut converged = false;
    let mut bad_streak = 0;
    let mut stalled = false;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let h = RadialProfile::from_values(grid.clone(), residual_vec(&phi)?)?;
        let raw = right_inverse(&h, &ctx)?;
        let next = phi.combine(1.0 - theta, &raw, theta)?;
        let diff = norm_star(&next.combine(1.0, &phi, -1.0)?, &opts.norm);
        let scale = norm_star(&next, &opts.norm).max(1.0);
        diffs.push(diff);
        if prev_diff.is_finite() && prev_diff > 0.0 {
            let rate = diff / prev_diff;
            history.push(rate);
            if rate > opts.damping_threshold && theta == 1.0 {
                theta = opts.damping;
                damped = true;
            }
            // three slow steps at a small update mean the round-off floor of
            // the weighted norm was reached
            let n = history.len();
            if n >= 3 && history[n - 3..].iter().all(|&q| q >= 0.5) && diff <= STALL_LEVEL * scale {
                phi = next;
                stalled = true;
                converged = true;
                break;
            }
            bad_streak = if rate >= 1.0 { bad_streak + 1 } else { 0 };
            if bad_streak >= 4 {
                return Err(Error::NonContraction { rate });
            }
        }
        if !diff.is_finite() {
            return Err(Error::NonContraction { rate: f64::INFINITY });
        }
        phi = next;
        prev_diff = diff;
        if diff <= tol * scale {
            converged = true;
            break;
        }
    }
    // contraction estimate from the ratios taken before round-off dominates
    let kept: Vec<f64> = history.iter().zip(&diffs[1..]).filter(|(_, &d)| d > NOISE_LEVEL * diffs[0]).map(|(&q, _)| q).collect();
    let rate = kept.iter().cloned().fold(history.first().cloned().unwrap_or(0.0), f64::max);
    if !converged {
        return Err(Error::NonContraction { rate: history.last().cloned().unwrap_or(f64::NAN) });
    }

    let profile = f0.combine(1.0, &phi, 1.0)?;
    let z1 = f0.f[0];
    let neck = solve_neck(z1, opts.neck_nodes)?;

    // residuals at interval midpoints, away from the nodes the iteration used
    let neck_res = max_over(&neck.grid, |z| {
        let (g, dg, d2g) = neck.eval3(z);
        Some(neck_mean_curvature(g, dg, d2g).abs())
    });
    let mid_eq = max_over(&grid, |r| (r <= r_switch).then(|| op.mid_residual(r, profile.eval3(r)).abs()));
    let mid_curv = max_over(&grid, |r| {
        (r <= r_switch).then(|| {
            let (_, d, dd) = profile.eval3(r);
            graph_mean_curvature(r, d, dd).abs()
        })
    });
    let far_rel = max_over(&grid, |r| {
        (r >= r_switch + 1.0).then(|| op.far_residual(r, profile.eval3(r)).abs() / (sc.eps_pow() * f0.value(r).powf(-2.0 * s)))
    });
    let (_, dfr1, _) = profile.node(0);
    let residual_norms = ResidualNorms {
        neck: neck_res,
        mid_equation: mid_eq,
        mid_curvature: mid_curv,
        far_relative: far_rel,
        matching_height: (profile.f[0] - neck.z1).abs().max((neck.r1 - R1).abs()),
        matching_slope: (dfr1 * neck.slope_at_z1 - 1.0).abs(),
    };

    let (mut tr, mut tf) = (Vec::new(), Vec::new());
    for (i, &r) in grid.iter().enumerate() {
        if r >= 10.0 * sc.tilde_r_eps && r <= 100.0 * sc.tilde_r_eps {
            tr.push(r);
            tf.push(profile.f[i]);
        }
    }
    let (tail_slope, _) = loglog_slope(&tr, &tf);
    let (fr, ff): (Vec<f64>, Vec<f64>) =
        grid.iter().zip(&profile.f).filter(|(r, _)| **r >= 10.0 * sc.tilde_r_eps).map(|(a, b)| (*a, *b)).unzip();
    let tail = PowerTail::fit(s, &fr, &ff);
    let n = profile.len();
    let edge = PowerTail::matching(s, grid[n - 1], profile.f[n - 1], profile.df[n - 1]);
    let profile = profile.with_tail(edge);

    let phi_norm = norm_star(&phi, &opts.norm);
    let mut inner_dev = 0.0f64;
    let mut env = 0.0f64;
    for (i, &r) in grid.iter().enumerate() {
        if r > sc.r_eps {
            break;
        }
        inner_dev = inner_dev.max((profile.f[i] - catenoid_arc(r)?[0]).abs());
        env = env.max(r.powf(2.0 - opts.norm.gamma));
    }

    let report = ReducedReport {
        s,
        eps,
        r1: R1,
        z1,
        r_eps: sc.r_eps,
        tilde_r_eps: sc.tilde_r_eps,
        c_bar: constants.c_bar,
        c_bar_pm: constants.c_bar_pm,
        forcing,
        iterations,
        contraction_rate: rate,
        contraction_history: history,
        damped,
        stalled,
        phi_norm,
        residual_norms,
        tail_fit: tail,
        tail_slope,
        inner_deviation: inner_dev,
        inner_envelope: phi_norm * env,
        wronskian_defect: ctx.kernels.wronskian_defect,
    };
    Ok(ReducedSolution { neck, profile, correction: phi, initial: init, report })
}
