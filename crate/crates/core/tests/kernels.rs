use fac_core::constants::*;
use fac_core::pv::*;
use statrs::function::beta::beta;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn half_laplacian_constant_is_one_over_pi() {
    let c = normalization_constant(1, 0.5).unwrap().value;
    assert!(rel(c, std::f64::consts::FRAC_1_PI) < 1e-13);
}

#[test]
fn closed_forms_agree_on_grid() {
    for k in 0..9 {
        let s = 0.55 + 0.05 * k as f64;
        for n in [1, 3, 5] {
            let a = normalization_constant(n, s).unwrap().value;
            let b = normalization_constant_alt(n, s).unwrap();
            assert!(rel(a, b) < 1e-12, "n={n} s={s}");
        }
    }
    let a = normalization_constant(1, 0.99).unwrap().value;
    assert!(rel(a, normalization_constant_alt(1, 0.99).unwrap()) < 1e-12);
}

#[test]
fn gamma_ratio_identity_holds() {
    for k in 0..9 {
        let s = 0.55 + 0.05 * k as f64;
        let v = gamma_ratio_identity(s).unwrap();
        assert!(rel(v, 2.0 / (3.0 + 2.0 * s)) < 1e-12);
    }
    assert!((gamma_ratio_identity(0.75).unwrap() - 4.0 / 9.0).abs() < 1e-12);
}

#[test]
fn constants_reject_bad_input() {
    assert!(normalization_constant(0, 0.5).is_err());
    assert!(normalization_constant(1, 1.0).is_err());
    assert!(normalization_constant(1, -0.1).is_err());
    assert!(FracOrder::pipeline(0.5).is_err());
}

#[test]
fn constant_function_has_zero_laplacian() {
    let f = FnField::with_limits(|_| 3.0, 3.0, 3.0);
    let s = FracOrder::new(0.75).unwrap();
    let v = frac_laplacian_1d(&f, 0.3, s, &QuadratureScheme::default()).unwrap();
    assert!(v.abs() < 1e-12);
}

#[test]
fn cosine_has_unit_symbol() {
    for s in [0.6, 0.75, 0.9] {
        let f = FnField::new(f64::cos);
        let v = frac_laplacian_1d(&f, 0.0, FracOrder::new(s).unwrap(), &QuadratureScheme::default()).unwrap();
        assert!(rel(v, 1.0) < 1e-4, "s={s} v={v}");
        // shifted point: symbol acts multiplicatively
        let v = frac_laplacian_1d(&f, 0.7, FracOrder::new(s).unwrap(), &QuadratureScheme::default()).unwrap();
        assert!(rel(v, 0.7f64.cos()) < 1e-4, "s={s} v={v}");
    }
}

fn bump(z: f64) -> f64 {
    if z.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - z * z)).exp()
    }
}

#[test]
fn homogeneity_under_dilation() {
    let s = FracOrder::new(0.75).unwrap();
    let sc = QuadratureScheme::default();
    let base = FnField::new(bump);
    for lambda in [0.5, 2.0] {
        let g = FnField::new(move |z| bump(lambda * z));
        for z0 in [0.0, 0.2] {
            let lhs = frac_laplacian_1d(&g, z0, s, &sc).unwrap();
            let rhs = lambda.powf(1.5) * frac_laplacian_1d(&base, lambda * z0, s, &sc).unwrap();
            assert!(rel(lhs, rhs) < 1e-4, "lambda={lambda} z0={z0} {lhs} {rhs}");
        }
    }
}

#[test]
fn excision_halving_is_stable() {
    let s = FracOrder::new(0.75).unwrap();
    let f = FnField::new(|z: f64| (-z * z).exp());
    let a = QuadratureScheme::default();
    let b = QuadratureScheme { excision_radius: a.excision_radius / 2.0, ..a };
    let va = frac_laplacian_1d(&f, 0.4, s, &a).unwrap();
    let vb = frac_laplacian_1d(&f, 0.4, s, &b).unwrap();
    assert!(rel(va, vb) < 1e-6, "{va} {vb}");
}

#[test]
fn algebraic_tail_matches_long_truncation() {
    // f = sign(z)(1 - (1+z^2)^{-s}) has exactly the algebraic tail coefficient 1
    let s = 0.75;
    let f = FnField::with_limits(move |z: f64| z.signum() * (1.0 - (1.0 + z * z).powf(-s)), -1.0, 1.0);
    let ord = FracOrder::new(s).unwrap();
    let short = QuadratureScheme { truncation_radius: 200.0, ..Default::default() }
        .with_tail(TailModel::Algebraic { power: 2.0 * s, coeff: 1.0 });
    let long = QuadratureScheme { truncation_radius: 1e5, node_budget: 16384, ..Default::default() };
    let a = frac_laplacian_1d(&f, 3.0, ord, &short).unwrap();
    let b = frac_laplacian_1d(&f, 3.0, ord, &long).unwrap();
    assert!(rel(a, b) < 1e-5, "{a} {b}");
}

#[test]
fn kernel_reductions_match_closed_forms() {
    let sc = QuadratureScheme::default();
    for s in [0.6, 0.75, 0.9] {
        let o = FracOrder::new(s).unwrap();
        for zeta in [0.5, 1.0, 2.0, 4.0] {
            let p = reduce_kernel_integral(KernelMoment::Plain, zeta, o, &sc).unwrap();
            assert!(rel(p, plain_kernel_closed_form(zeta, s)) < 1e-6);
            let q1 = reduce_kernel_integral(KernelMoment::Quadratic(1), zeta, o, &sc).unwrap();
            let q2 = reduce_kernel_integral(KernelMoment::Quadratic(2), zeta, o, &sc).unwrap();
            assert!(rel(q1, quadratic_kernel_closed_form(zeta, s)) < 1e-6);
            assert!((q1 - q2).abs() <= 1e-10 * q1.abs());
            // scaling invariance of the plain reduction
            let p0 = reduce_kernel_integral(KernelMoment::Plain, 1.0, o, &sc).unwrap();
            assert!(rel(p * zeta.powf(1.0 + 2.0 * s), p0) < 1e-6);
        }
    }
}

#[test]
fn plain_kernel_example_at_two() {
    let s = 0.75;
    let v = reduce_kernel_integral(KernelMoment::Plain, 2.0, FracOrder::new(s).unwrap(), &QuadratureScheme::default()).unwrap();
    let expect = c_ns(1, s) / c_ns(3, s) * 2f64.powf(-2.5);
    assert!(rel(v, expect) < 1e-6);
}

#[test]
fn alpha_moment_matches_beta_function() {
    // 2π ∫ ρ^{1+α}(ρ²+ζ²)^{-a} dρ = π |ζ|^{2+α-2a} B(1+α/2, a-1-α/2)
    let s = 0.75;
    let a = (3.0 + 2.0 * s) / 2.0;
    for alpha in [0.1, 0.3] {
        for zeta in [0.5, 2.0] {
            let v = reduce_kernel_integral(KernelMoment::Alpha(alpha), zeta, FracOrder::new(s).unwrap(), &QuadratureScheme::default())
                .unwrap();
            let expect = std::f64::consts::PI * zeta.powf(2.0 + alpha - 2.0 * a) * beta(1.0 + alpha / 2.0, a - 1.0 - alpha / 2.0);
            assert!(rel(v, expect) < 1e-6, "{v} {expect}");
        }
    }
}

#[test]
fn kernel_reduction_rejects_bad_input() {
    let o = FracOrder::new(0.75).unwrap();
    let sc = QuadratureScheme::default();
    assert!(reduce_kernel_integral(KernelMoment::Plain, 0.0, o, &sc).is_err());
    assert!(reduce_kernel_integral(KernelMoment::Alpha(0.6), 1.0, o, &sc).is_err());
    assert!(reduce_kernel_integral(KernelMoment::Quadratic(3), 1.0, o, &sc).is_err());
}
