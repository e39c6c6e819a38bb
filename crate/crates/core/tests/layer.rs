use fac_core::constants::{c_ns, FracOrder};
use fac_core::cutoff::CutoffPair;
use fac_core::layer::*;
use fac_core::pv::{frac_laplacian_1d, FnField, QuadratureScheme};
use proptest::prelude::*;
use std::sync::OnceLock;

fn profile(s: f64) -> &'static LayerProfile {
    static P60: OnceLock<LayerProfile> = OnceLock::new();
    static P75: OnceLock<LayerProfile> = OnceLock::new();
    static P90: OnceLock<LayerProfile> = OnceLock::new();
    let cell = match s {
        x if x == 0.6 => &P60,
        x if x == 0.75 => &P75,
        _ => &P90,
    };
    cell.get_or_init(|| solve_layer(FracOrder::new(s).unwrap(), 100.0, 800, 1e-10).unwrap())
}

#[test]
fn layer_invariants() {
    let p = profile(0.75);
    let n = (p.grid.len() - 1) / 2;
    assert_eq!(p.values[n], 0.0);
    for k in 0..=n {
        assert!((p.values[n + k] + p.values[n - k]).abs() <= 1e-10);
        assert!((p.grid[n + k] + p.grid[n - k]).abs() <= 1e-12);
    }
    assert!(p.values.windows(2).all(|w| w[1] > w[0]));
    assert!(p.values.iter().all(|v| v.abs() < 1.0));
    assert!(p.derivative_values.iter().all(|d| *d > 0.0));
}

#[test]
fn residual_is_small() {
    for s in [0.6, 0.75, 0.9] {
        let p = profile(s);
        assert!(p.residual_sup <= 1e-4, "s={s} residual {}", p.residual_sup);
    }
}

#[test]
fn residual_confirmed_by_finer_scheme() {
    let p = profile(0.75);
    let fine = QuadratureScheme { node_budget: 16384, truncation_radius: 1e4, excision_radius: 1e-5, ..p.scheme() };
    for z in [0.0, 0.3, 1.7, 4.2, 13.0, 60.0] {
        let r = p.residual_at(z, &fine).unwrap();
        assert!(r.abs() <= 1e-4, "z={z} r={r}");
    }
}

#[test]
fn tail_exponent_matches_order() {
    for s in [0.6, 0.75, 0.9] {
        let p = profile(s);
        assert!((p.tail_exponent - 2.0 * s).abs() <= 0.05 * 2.0 * s, "s={s} {}", p.tail_exponent);
    }
}

#[test]
fn tail_coefficient_matches_far_field_balance() {
    // far away w^3 - w ≈ 2(w - 1) balances the pull of the lower state,
    // C(1,s) z^{-2s}/s, so c_w ≈ C(1,s)/(2s)
    for s in [0.6, 0.75, 0.9] {
        let p = profile(s);
        let oracle = c_ns(1, s) / (2.0 * s);
        assert!((p.c_w - oracle).abs() < 0.02 * oracle, "s={s} {} {oracle}", p.c_w);
    }
}

#[test]
fn zero_is_a_root_of_the_operator() {
    let p = profile(0.75);
    let v = frac_laplacian_1d(p, 0.0, p.order(), &p.scheme()).unwrap();
    assert!(v.abs() < 1e-10);
}

#[test]
fn translates_solve_off_grid() {
    let p = profile(0.75);
    let delta = 0.3137;
    let g = FnField::with_limits(move |z| p.w(z - delta), -1.0, 1.0);
    let sc = QuadratureScheme { node_budget: 8192, ..p.scheme() };
    for z0 in [0.05, 0.77, 2.9, 8.1] {
        let lap = frac_laplacian_1d(&g, z0 + delta, p.order(), &sc).unwrap();
        let w = p.w(z0);
        let r = lap + w * w * w - w;
        assert!(r.abs() < 1e-4, "z0={z0} r={r}");
    }
}

#[test]
fn solver_rejects_bad_options() {
    let s = FracOrder::new(0.75).unwrap();
    assert!(solve_layer(s, 40.0, 800, 1e-10).is_err());
    assert!(solve_layer(s, 100.0, 100, 1e-10).is_err());
    assert!(solve_layer(s, 100.0, 800, 1e-12).is_err());
}

#[test]
fn curvature_weight_is_even_and_forms_agree() {
    let p = profile(0.75);
    let sc = p.scheme();
    for z0 in [0.5, 1.0, 3.0, 7.5] {
        let a = c_h(z0, p, &sc).unwrap();
        let b = c_h(-z0, p, &sc).unwrap();
        assert!((a - b).abs() <= 1e-10 * a.abs());
    }
    for z0 in [0.0, 1.0, 5.0, 10.0] {
        let a = c_h(z0, p, &sc).unwrap();
        let b = c_h_alt(z0, p, &sc).unwrap();
        assert!(a > 0.0);
        assert!((a - b).abs() <= 1e-5 * a.abs(), "z0={z0} {a} {b}");
    }
}

#[test]
fn curvature_weight_decay() {
    let p = profile(0.75);
    let sc = p.scheme();
    let zs = [5.0, 10.0, 20.0];
    let v: Vec<f64> = zs.iter().map(|&z| c_h(z, p, &sc).unwrap()).collect();
    let (slope, _) = fac_core::quad::loglog_slope(&zs, &v);
    assert!((slope + 0.5).abs() <= 0.05, "slope {slope}");
}

#[test]
fn curvature_weight_window() {
    let p = profile(0.75);
    assert!(c_h(60.0, p, &p.scheme()).is_err());
}

#[test]
fn projection_constants_positive_and_stable() {
    for s in [0.6, 0.75, 0.9] {
        let p = profile(s);
        let a = projection_constants(p, &CutoffPair, 20.0).unwrap();
        assert!(a.c_bar > 0.0 && a.c_bar_pm > 0.0);
        if s == 0.75 {
            let b = projection_constants(p, &CutoffPair, 40.0).unwrap();
            assert!((a.c_bar - b.c_bar).abs() < 0.01 * a.c_bar, "{} {}", a.c_bar, b.c_bar);
        }
    }
}

#[test]
fn interaction_constant_matches_trapezoid_oracle() {
    let p = profile(0.75);
    let pc = projection_constants(p, &CutoffPair, 20.0).unwrap();
    // independent composite trapezoid on a fine uniform grid
    let m = 400_000;
    let h = 80.0 / m as f64;
    let mut acc = 0.0;
    for i in 0..=m {
        let z = -40.0 + i as f64 * h;
        let (w, dw, _) = p.eval3(z);
        let wt = if i == 0 || i == m { 0.5 } else { 1.0 };
        acc += wt * (1.0 - w * w) * CutoffPair.zeta(z, 20.0) * dw;
    }
    let oracle = 3.0 * p.c_w * acc * h;
    assert!((pc.c_bar_pm - oracle).abs() < 1e-6 * oracle, "{} {oracle}", pc.c_bar_pm);
}

#[test]
fn projection_rejects_wide_window() {
    assert!(projection_constants(profile(0.75), &CutoffPair, 60.0).is_err());
}

#[test]
fn interaction_limits() {
    let p = profile(0.75);
    let big = far_interaction(p, 1e6, 1e6);
    assert!((big - 24.0).abs() < 1e-6);
    let v = far_interaction(p, 30.0, 30.0);
    assert!(v < 24.0 && v > 23.0);
    assert!(far_interaction(p, 2.0, -1e9).abs() < 1e-8);
}

fn f(u: f64) -> f64 {
    u * u * u - u
}

proptest! {
    #[test]
    fn interaction_is_the_nonlinear_remainder(zp in -50.0f64..50.0, zm in -50.0f64..50.0) {
        let p = profile(0.75);
        let (a, b) = (p.w(zp), p.w(zm));
        let lhs = far_interaction(p, zp, zm);
        let rhs = f(a + b + 1.0) - f(a) - f(b);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn profile_is_odd_off_grid(z in 0.0f64..500.0) {
        let p = profile(0.75);
        prop_assert!((p.w(z) + p.w(-z)).abs() <= 1e-12);
        prop_assert!(p.w(z).abs() < 1.0);
    }

    #[test]
    fn projection_unchanged_by_reflection(_x in 0..1u8) {
        // w -> -w(-z) reproduces the same nodal data
        let p = profile(0.75);
        let n = p.values.len();
        for i in 0..n {
            prop_assert!((p.values[i] + p.values[n - 1 - i]).abs() <= 1e-12);
        }
    }
}

#[test]
fn continuation_reaches_low_order() {
    let opts = LayerOptions { continuation: true, ..Default::default() };
    let p = solve_layer_with(FracOrder::new(0.55).unwrap(), &opts).unwrap();
    assert!(p.residual_sup <= 1e-4);
}
