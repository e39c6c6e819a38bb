//! Command implementations. Each writes its outputs under `out_dir` and
//! records the full configuration in its JSON report.

use std::sync::Arc;

use fac_core::acceptance::{Acceptance, AcceptanceOptions, Suite, Verdict};
use fac_core::config::RunConfig;
use fac_core::constants::{gamma_ratio_identity, normalization_constant, FracOrder};
use fac_core::cutoff::CutoffPair;
use fac_core::geometry::{ApproxSolutionSpec, FermiChart};
use fac_core::layer::{c_h, projection_constants, solve_layer_with, LayerMetadata, LayerProfile, ProjectionConstants};
use fac_core::output::{downsample, write_csv, write_json};
use fac_core::reduced::{growth_exponent, solve_reduced, ReducedReport, ReducedSolution};
use fac_core::verification::{
    audit_error, audit_far_decay, energy_growth, midplane_point, point_at, DecayField, EnergyOptions, EnergyReport,
    ErrorSample, FarDecay, FlatLayer, McOptions, WindowPolicy,
};
use fac_core::Error;
use serde::Serialize;

use crate::Failure;

const EXIT_IDENTITY: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_VERIFY: u8 = 5;
const PLOT_POINTS: usize = 400;

fn io(e: Error) -> Failure {
    Failure::from_error(e, crate::EXIT_IO)
}

fn solver(e: Error) -> Failure {
    Failure::from_error(e, EXIT_SOLVER)
}

#[derive(Serialize)]
struct ConstantsRow {
    s: f64,
    c1: f64,
    c3: f64,
    c5: f64,
    identity: f64,
    expected: f64,
    relative_residual: f64,
}

#[derive(Serialize)]
struct ConstantsReport<'a> {
    config: &'a RunConfig,
    rows: Vec<ConstantsRow>,
    max_relative_residual: f64,
    tolerance: f64,
    passed: bool,
}

/// Table over `s_grid`, or over the configured `s` alone when it was given
/// on the command line.
pub fn constants(cfg: &RunConfig, single: bool) -> Result<(), Failure> {
    const TOL: f64 = 1e-12;
    let orders = if single { vec![cfg.s] } else { cfg.s_grid.clone() };
    let mut rows = Vec::with_capacity(orders.len());
    for s in orders {
        let identity = gamma_ratio_identity(s).map_err(|e| Failure::from_error(e, EXIT_IDENTITY))?;
        let expected = 2.0 / (3.0 + 2.0 * s);
        let c = |n| normalization_constant(n, s).map(|c| c.value).map_err(|e| Failure::from_error(e, EXIT_IDENTITY));
        rows.push(ConstantsRow {
            s,
            c1: c(1)?,
            c3: c(3)?,
            c5: c(5)?,
            identity,
            expected,
            relative_residual: ((identity - expected) / expected).abs(),
        });
    }
    println!("{:>6} {:>14} {:>14} {:>14} {:>14} {:>14} {:>10}", "s", "C1", "C3", "C5", "identity", "2/(3+2s)", "residual");
    for r in &rows {
        println!(
            "{:>6.3} {:>14.10} {:>14.10} {:>14.10} {:>14.10} {:>14.10} {:>10.2e}",
            r.s, r.c1, r.c3, r.c5, r.identity, r.expected, r.relative_residual
        );
    }
    let max = rows.iter().map(|r| r.relative_residual).fold(0.0, f64::max);
    let passed = max <= TOL;
    write_csv(
        &cfg.out_dir.join("constants.csv"),
        &["s", "C1", "C3", "C5", "identity", "expected", "relative_residual"],
        rows.iter().map(|r| vec![r.s, r.c1, r.c3, r.c5, r.identity, r.expected, r.relative_residual]),
    )
    .map_err(io)?;
    let report = ConstantsReport { config: cfg, rows, max_relative_residual: max, tolerance: TOL, passed };
    write_json(&cfg.out_dir.join("constants.json"), &report).map_err(io)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::new(EXIT_IDENTITY, format!("identity residual {max:.3e} exceeds {TOL:e}")))
    }
}

fn layer(cfg: &RunConfig) -> Result<Arc<LayerProfile>, Failure> {
    let order = FracOrder::pipeline(cfg.s).map_err(solver)?;
    solve_layer_with(order, &cfg.layer_options()).map(Arc::new).map_err(solver)
}

fn projection(cfg: &RunConfig, p: &LayerProfile) -> Result<ProjectionConstants, Failure> {
    projection_constants(p, &CutoffPair, cfg.r_zeta).map_err(solver)
}

#[derive(Serialize)]
struct ProfileReport<'a> {
    config: &'a RunConfig,
    layer: LayerMetadata,
    #[serde(rename = "C_bar")]
    c_bar: f64,
    #[serde(rename = "C_bar_pm")]
    c_bar_pm: f64,
    #[serde(rename = "c_H_at_0")]
    c_h_origin: f64,
}

pub fn profile1d(cfg: &RunConfig, plot: bool) -> Result<(), Failure> {
    let p = layer(cfg)?;
    let pc = projection(cfg, &p)?;
    let ch0 = c_h(0.0, &p, &p.scheme()).map_err(solver)?;
    let dir = &cfg.out_dir;
    let rows = |idx: Vec<usize>| idx.into_iter().map(|i| vec![p.grid[i], p.values[i], p.derivative_values[i]]).collect::<Vec<_>>();
    write_csv(&dir.join("profile1d.csv"), &["z", "w", "dw"], rows((0..p.grid.len()).collect())).map_err(io)?;
    if plot {
        write_csv(&dir.join("profile1d_plot.csv"), &["z", "w", "dw"], rows(downsample(p.grid.len(), PLOT_POINTS)))
            .map_err(io)?;
    }
    let report = ProfileReport { config: cfg, layer: p.metadata(), c_bar: pc.c_bar, c_bar_pm: pc.c_bar_pm, c_h_origin: ch0 };
    write_json(&dir.join("profile1d.json"), &report).map_err(io)?;
    println!("c_w = {:.10}  C_bar = {:.10}  C_bar_pm = {:.10}  c_H(0) = {:.10}", p.c_w, pc.c_bar, pc.c_bar_pm, ch0);
    Ok(())
}

fn reduced_solution(cfg: &RunConfig, p: &LayerProfile) -> Result<ReducedSolution, Failure> {
    let pc = projection(cfg, p)?;
    let opts = cfg.reduced_options().map_err(solver)?;
    solve_reduced(cfg.s, cfg.eps, &CutoffPair, &pc, cfg.reduced_tol, &opts).map_err(solver)
}

#[derive(Serialize)]
struct ReducedRun<'a> {
    config: &'a RunConfig,
    report: &'a ReducedReport,
    /// `2/(2s+1)`
    target_tail_slope: f64,
    tail_slope_relative_error: f64,
}

pub fn reduced(cfg: &RunConfig, plot: bool) -> Result<(), Failure> {
    let p = layer(cfg)?;
    let sol = reduced_solution(cfg, &p)?;
    let dir = &cfg.out_dir;
    let n = &sol.neck;
    write_csv(&dir.join("neck.csv"), &["z", "G", "dG"], (0..n.grid.len()).map(|i| vec![n.grid[i], n.g[i], n.dg[i]]))
        .map_err(io)?;
    let f = &sol.profile;
    let row = |i: usize| vec![f.grid[i], f.f[i], f.df[i], f.d2f[i]];
    write_csv(&dir.join("profile.csv"), &["r", "F", "dF", "d2F"], (0..f.grid.len()).map(row)).map_err(io)?;
    if plot {
        let idx = downsample(f.grid.len(), PLOT_POINTS);
        write_csv(&dir.join("profile_plot.csv"), &["r", "F"], idx.into_iter().map(|i| vec![f.grid[i], f.f[i]]))
            .map_err(io)?;
    }
    let target = growth_exponent(cfg.s);
    let rel = (sol.report.tail_slope / target - 1.0).abs();
    let run = ReducedRun { config: cfg, report: &sol.report, target_tail_slope: target, tail_slope_relative_error: rel };
    write_json(&dir.join("reduced.json"), &run).map_err(io)?;
    println!(
        "contraction rate {:.4} after {} iterations; tail slope {:.4} vs {:.4}",
        sol.report.contraction_rate, sol.report.iterations, sol.report.tail_slope, target
    );
    Ok(())
}

fn approx_spec(cfg: &RunConfig, p: Arc<LayerProfile>, sol: &ReducedSolution) -> Result<ApproxSolutionSpec, Failure> {
    let chart = FermiChart::from_solution(sol, cfg.delta_bar).map_err(solver)?;
    ApproxSolutionSpec::new(chart, p, cfg.r_bar, cfg.tau(), cfg.alpha_curv()).map_err(solver)
}

#[derive(Serialize)]
struct AuditReport<'a> {
    config: &'a RunConfig,
    samples: &'a [ErrorSample],
    far_decay: FarDecay,
    /// `4s/(2s+1)`
    expected_decay_exponent: f64,
    flagged: usize,
}

/// Near points at rescaled radii 1 to 4 on and beside the upper leaf, far
/// points on the midplane, and the off-interface decay at `z ~ r^{2/(2s+1)}`.
pub fn fermi_audit(cfg: &RunConfig) -> Result<(), Failure> {
    let p = layer(cfg)?;
    let sol = reduced_solution(cfg, &p)?;
    let spec = approx_spec(cfg, p, &sol)?;
    let e = cfg.eps;
    let policy = WindowPolicy::default();
    let mut pts: Vec<[f64; 3]> = [(1.0, 0.0), (1.0, 1.0), (2.0, 0.0), (2.0, 1.0), (4.0, 0.5)]
        .iter()
        .map(|&(r, z)| point_at(&spec.chart, r / e, z))
        .collect();
    pts.extend([40.0, 80.0, 160.0].iter().map(|r| midplane_point(r / e)));
    let samples = audit_error(&spec, &pts, &policy);
    write_csv(
        &cfg.out_dir.join("audit.csv"),
        &["r", "x3", "z", "S_value", "predicted", "remainder", "exterior_flat"],
        samples.iter().map(|a| {
            let l = &a.location;
            vec![l.r, l.x3, l.z, a.s_value, a.predicted, a.remainder, a.exterior_flat]
        }),
    )
    .map_err(io)?;
    let radii: Vec<f64> = [40.0, 80.0, 160.0, 320.0].iter().map(|r| r / e).collect();
    let far_decay = audit_far_decay(DecayField::Approx(&spec), &radii, 1.0, &policy).map_err(solver)?;
    let flagged = samples.iter().filter(|a| a.flag.is_some()).count();
    let expected = 4.0 * cfg.s / (2.0 * cfg.s + 1.0);
    println!(
        "{} points, {flagged} flagged; decay exponent {} vs {expected:.4}",
        samples.len(),
        far_decay.exponent.map_or("n/a".into(), |x| format!("{x:.4}"))
    );
    let report = AuditReport { config: cfg, samples: &samples, far_decay, expected_decay_exponent: expected, flagged };
    write_json(&cfg.out_dir.join("audit.json"), &report).map_err(io)
}

#[derive(Serialize)]
struct EnergyRun<'a> {
    config: &'a RunConfig,
    approximate_solution: EnergyReport,
    flat_layer: EnergyReport,
}

/// `E_R(u*)` for `R ε ∈ {4, 8, 16, 32}` with the flat layer as control.
pub fn energy(cfg: &RunConfig) -> Result<(), Failure> {
    let p = layer(cfg)?;
    let sol = reduced_solution(cfg, &p)?;
    let spec = approx_spec(cfg, p.clone(), &sol)?;
    let opts = EnergyOptions {
        mc: McOptions { samples: cfg.mc_samples, seed: cfg.seed, ..Default::default() },
        ..Default::default()
    };
    let radii: Vec<f64> = [4.0, 8.0, 16.0, 32.0].iter().map(|r| r / cfg.eps).collect();
    let u = energy_growth(&spec, cfg.s, &radii, &opts).map_err(solver)?;
    let flat = energy_growth(&FlatLayer(p), cfg.s, &[16.0, 32.0, 64.0, 128.0], &opts).map_err(solver)?;
    write_csv(
        &cfg.out_dir.join("energy.csv"),
        &["R", "E_R", "std_error"],
        (0..u.radii.len()).map(|i| vec![u.radii[i], u.energies[i], u.std_errors[i]]),
    )
    .map_err(io)?;
    println!("slope {:.4} (R^2 {:.4}); flat layer slope {:.4}", u.fitted_slope, u.r_squared, flat.fitted_slope);
    let run = EnergyRun { config: cfg, approximate_solution: u, flat_layer: flat };
    write_json(&cfg.out_dir.join("energy.json"), &run).map_err(io)
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    config: &'a RunConfig,
    suite: Suite,
    quick: bool,
    verdicts: &'a [Verdict],
    failing: Vec<u8>,
    passed: bool,
}

pub fn verify(cfg: &RunConfig, suite: Suite, quick: bool) -> Result<(), Failure> {
    let acc = Acceptance::new(AcceptanceOptions { quick, seed: cfg.seed });
    let mut verdicts = Vec::new();
    for &id in suite.criteria() {
        let v = acc.run(id);
        println!("{}", v.line());
        verdicts.push(v);
    }
    let failing: Vec<u8> = verdicts.iter().filter(|v| v.blocking()).map(|v| v.id).collect();
    let report = VerifyReport { config: cfg, suite, quick, verdicts: &verdicts, failing: failing.clone(), passed: failing.is_empty() };
    write_json(&cfg.out_dir.join("verify.json"), &report).map_err(io)?;
    if failing.is_empty() {
        Ok(())
    } else {
        let list: Vec<String> = failing.iter().map(|i| i.to_string()).collect();
        Err(Failure::new(EXIT_VERIFY, format!("failing criteria: {}", list.join(", "))))
    }
}
