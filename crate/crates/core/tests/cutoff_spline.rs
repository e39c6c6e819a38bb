use fac_core::cutoff::CutoffPair;
use fac_core::spline::{CubicSpline, Hermite};
use proptest::prelude::*;

proptest! {
    #[test]
    fn cutoffs_are_bounded_with_supported_derivatives(t in -3.0f64..4.0) {
        let c = CutoffPair;
        let (e, de, _) = c.eta3(t);
        let (x, dx, _) = c.chi3(t);
        prop_assert!((0.0..=1.0).contains(&e) && (0.0..=1.0).contains(&x));
        if !(1.0..=2.0).contains(&t) { prop_assert!(de == 0.0); }
        if !(0.0..=1.0).contains(&t) { prop_assert!(dx == 0.0); }
        if t <= 1.0 { prop_assert!(e == 1.0); }
        if t >= 2.0 { prop_assert!(e == 0.0); }
        if t <= 0.0 { prop_assert!(x == 0.0); }
        if t >= 1.0 { prop_assert!(x == 1.0); }
    }

    #[test]
    fn cutoff_derivatives_match_differences(t in 0.01f64..0.99) {
        let c = CutoffPair;
        let h = 1e-6;
        let (_, d1, d2) = c.chi3(t);
        prop_assert!((d1 - (c.chi(t + h) - c.chi(t - h)) / (2.0 * h)).abs() < 1e-6);
        let (_, p1, _) = c.chi3(t + h);
        let (_, m1, _) = c.chi3(t - h);
        prop_assert!((d2 - (p1 - m1) / (2.0 * h)).abs() < 1e-5);
    }
}

#[test]
fn clamped_spline_reproduces_cubics() {
    let x: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).powf(1.3)).collect();
    let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t - 0.1 * t * t * t;
    let df = |t: f64| -2.0 + t - 0.3 * t * t;
    let y: Vec<f64> = x.iter().map(|&t| f(t)).collect();
    let sp = CubicSpline::clamped(&x, &y, df(x[0]), df(*x.last().unwrap())).unwrap();
    for k in 0..100 {
        let t = x[0] + (x[11] - x[0]) * k as f64 / 99.0;
        let (v, d, _) = sp.eval3(t);
        assert!((v - f(t)).abs() < 1e-12);
        assert!((d - df(t)).abs() < 1e-11);
    }
}

#[test]
fn hermite_reproduces_cubics() {
    let x = vec![0.0, 0.5, 1.7, 2.0];
    let f = |t: f64| t * t * t - t;
    let h = Hermite::new(x.clone(), x.iter().map(|&t| f(t)).collect(), x.iter().map(|&t| 3.0 * t * t - 1.0).collect());
    for t in [0.1, 0.9, 1.99] {
        let (v, d, dd) = h.eval3(t);
        assert!((v - f(t)).abs() < 1e-12 && (d - 3.0 * t * t + 1.0).abs() < 1e-11 && (dd - 6.0 * t).abs() < 1e-10);
    }
}

#[test]
fn spline_rejects_unsorted() {
    assert!(CubicSpline::clamped(&[0.0, 2.0, 1.0], &[0.0; 3], 0.0, 0.0).is_err());
}
