use fac_core::ode::{integrate, integrate_to, OdeOptions};
use fac_core::profile::{CatenoidArc, Flat, PowerLaw, PowerTail, Radial, RadialProfile, Rescaled};
use fac_core::spline::quintic_hermite;
use proptest::prelude::*;

#[test]
fn dopri_hits_output_times_on_exponential() {
    let outs = [0.1, 0.35, 1.0, 2.0];
    let ys = integrate_to(|_, y, d| d[0] = y[0], 0.0, &[1.0], &outs, &OdeOptions::default()).unwrap();
    for (y, t) in ys.iter().zip(outs) {
        assert!((y[0] - f64::exp(t)).abs() < 1e-9 * f64::exp(t));
    }
}

#[test]
fn dopri_integrates_backwards_and_stops_early() {
    let ys = integrate_to(|_, y, d| d[0] = -y[0], 1.0, &[1.0], &[0.5, 0.0], &OdeOptions::default()).unwrap();
    assert!((ys[1][0] - f64::exp(1.0)).abs() < 1e-9);
    let outs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
    let ys = integrate(|_, _, d| d[0] = 1.0, 0.0, &[0.0], &outs, &OdeOptions::default(), |_, y| y[0] < 3.5).unwrap();
    assert!(ys.len() < outs.len());
    assert!(ys.last().unwrap()[0] >= 3.5);
}

#[test]
fn dopri_oscillator_conserves_energy() {
    let outs: Vec<f64> = (1..=50).map(|i| i as f64).collect();
    let ys = integrate_to(
        |_, y, d| {
            d[0] = y[1];
            d[1] = -y[0];
        },
        0.0,
        &[1.0, 0.0],
        &outs,
        &OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() },
    )
    .unwrap();
    for (y, t) in ys.iter().zip(&outs) {
        assert!((y[0] - t.cos()).abs() < 1e-9);
        assert!((y[0] * y[0] + y[1] * y[1] - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #[test]
    fn quintic_hermite_reproduces_quintics(c in prop::array::uniform6(-2.0f64..2.0), x0 in -1.0f64..1.0, h in 0.1f64..3.0, t in 0.0f64..1.0) {
        let p = |x: f64| c[0] + x * (c[1] + x * (c[2] + x * (c[3] + x * (c[4] + x * c[5]))));
        let dp = |x: f64| c[1] + x * (2.0 * c[2] + x * (3.0 * c[3] + x * (4.0 * c[4] + x * 5.0 * c[5])));
        let ddp = |x: f64| 2.0 * c[2] + x * (6.0 * c[3] + x * (12.0 * c[4] + x * 20.0 * c[5]));
        let x1 = x0 + h;
        let x = x0 + t * h;
        let (v, d, dd) = quintic_hermite(x0, x1, (p(x0), dp(x0), ddp(x0)), (p(x1), dp(x1), ddp(x1)), x);
        let scale = 1.0 + (x0.abs() + h).powi(5) * 2.0 * 6.0;
        prop_assert!((v - p(x)).abs() < 1e-11 * scale);
        prop_assert!((d - dp(x)).abs() < 1e-9 * scale / h);
        prop_assert!((dd - ddp(x)).abs() < 1e-8 * scale / (h * h));
    }

    #[test]
    fn rescaling_round_trips(r in 1.5f64..500.0, eps in 1e-3f64..0.5) {
        let arc = CatenoidArc;
        let fe = Rescaled { inner: &arc, eps };
        let back = Rescaled { inner: &fe, eps: 1.0 / eps };
        let (a, b, c) = back.eval3(r);
        let (x, y, z) = arc.eval3(r);
        prop_assert!((a - x).abs() < 1e-12 * (1.0 + x.abs()));
        prop_assert!((b - y).abs() < 1e-12 * (1.0 + y.abs()));
        prop_assert!((c - z).abs() < 1e-12 * (1.0 + z.abs()));
        // F_ε(r) = F(εr)/ε
        prop_assert!((fe.value(r / eps) - arc.value(r) / eps).abs() < 1e-12 * arc.value(r) / eps);
    }
}

#[test]
fn sampled_arc_interpolates_between_nodes() {
    let grid: Vec<f64> = (0..400).map(|i| 1.2 * (i as f64 * 0.01).exp()).collect();
    let p = RadialProfile::sample(&CatenoidArc, &grid).unwrap();
    for w in grid.windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        let (a, b, c) = p.eval3(m);
        let (x, y, z) = CatenoidArc.eval3(m);
        assert!((a - x).abs() < 1e-10 && (b - y).abs() < 1e-9 && (c - z).abs() < 1e-5, "m={m}");
    }
}

#[test]
fn profile_from_values_gets_derivatives() {
    let grid: Vec<f64> = (0..300).map(|i| 1.0 + i as f64 * 0.02).collect();
    let vals: Vec<f64> = grid.iter().map(|r| r.sin()).collect();
    let p = RadialProfile::from_values(grid.clone(), vals).unwrap();
    assert!((p.df[0] - grid[0].cos()).abs() < 2e-4);
    for i in 5..295 {
        assert!((p.df[i] - grid[i].cos()).abs() < 1e-5);
        assert!((p.d2f[i] + grid[i].sin()).abs() < 1e-3);
    }
}

#[test]
fn power_tail_fit_recovers_coefficients() {
    let s = 0.75;
    let truth = PowerTail::for_order(s, 0.3, -2.0);
    let r: Vec<f64> = (0..200).map(|i| 50.0 * (i as f64 * 0.02).exp()).collect();
    let f: Vec<f64> = r.iter().map(|&x| truth.eval3(x).0).collect();
    let fit = PowerTail::fit(s, &r, &f);
    assert!((fit.a - 0.3).abs() < 1e-10 && (fit.b + 2.0).abs() < 1e-7);
    // derivatives of the model against differences
    let (v, d, dd) = truth.eval3(100.0);
    let h = 1e-3;
    assert!((d - (truth.eval3(100.0 + h).0 - truth.eval3(100.0 - h).0) / (2.0 * h)).abs() < 1e-8);
    assert!((dd - (truth.eval3(100.0 + h).1 - truth.eval3(100.0 - h).1) / (2.0 * h)).abs() < 1e-8);
    assert!(v > 0.0);
}

#[test]
fn profile_tail_takes_over_past_the_grid() {
    let grid: Vec<f64> = (0..50).map(|i| 1.0 + i as f64).collect();
    let pl = PowerLaw { a: 2.0, p: 0.8 };
    let tail = PowerTail { a: 2.0, b: 0.0, growth: 0.8, decay: 0.2 };
    let p = RadialProfile::sample(&pl, &grid).unwrap().with_tail(tail);
    assert!((p.value(400.0) - pl.value(400.0)).abs() < 1e-12);
}

#[test]
fn profile_combination_and_validation() {
    let grid: Vec<f64> = (0..10).map(|i| 1.0 + i as f64).collect();
    let a = RadialProfile::sample(&Flat(2.0), &grid).unwrap();
    let b = RadialProfile::sample(&PowerLaw { a: 1.0, p: 1.0 }, &grid).unwrap();
    let c = a.combine(0.5, &b, 2.0).unwrap();
    assert!((c.value(3.5) - (1.0 + 7.0)).abs() < 1e-12);
    assert!(a.zeros_like().f.iter().all(|&v| v == 0.0));
    let other = RadialProfile::sample(&Flat(1.0), &grid[1..]).unwrap();
    assert!(a.combine(1.0, &other, 1.0).is_err());
    assert!(RadialProfile::new(vec![1.0, 0.5, 2.0], vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]).is_err());
    assert!(RadialProfile::new(vec![1.0, 2.0], vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]).is_err());
}

#[test]
fn power_tail_matching_is_c1() {
    let t = PowerTail::matching(0.75, 80.0, 3.0, 0.02);
    let (v, d, _) = t.eval3(80.0);
    assert!((v - 3.0).abs() < 1e-12 && (d - 0.02).abs() < 1e-14);
}
