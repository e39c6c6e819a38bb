//! Adaptive Dormand–Prince 5(4) integration with output at prescribed times.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h_min: 1e-14, max_steps: 2_000_000 }
    }
}

/// Integrate `y' = f(t, y)` from `t0` and return the state at every entry
/// of the increasing (or decreasing) list `outputs`. The callback may
/// return `false` to stop early (the result is then truncated).
pub fn integrate<F, S>(mut f: F, t0: f64, y0: &[f64], outputs: &[f64], opts: &OdeOptions, mut stop: S) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(f64, &[f64]) -> bool,
{
    let n = y0.len();
    let dir = match outputs.last() {
        Some(&t) if t < t0 => -1.0,
        _ => 1.0,
    };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut out = Vec::with_capacity(outputs.len());
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    f(t, &y, &mut k[0]);
    let span = outputs.last().map(|&e| (e - t0).abs()).unwrap_or(0.0);
    let mut h = (span * 1e-3).max(1e-6) * dir;
    let mut steps = 0usize;
    for &target in outputs {
        while (target - t) * dir > 1e-15 * (1.0 + t.abs()) {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::NonConvergence(format!("ODE step budget exhausted at t={t}")));
            }
            let mut last = false;
            let h_natural = h;
            if (t + h - target) * dir >= 0.0 {
                h = target - t;
                last = true;
            }
            let stage = |k: &Vec<Vec<f64>>, coef: &[f64], tmp: &mut Vec<f64>| {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, c) in coef.iter().enumerate() {
                        acc += c * k[j][i];
                    }
                    tmp[i] = y[i] + h * acc;
                }
            };
            stage(&k, &[A21], &mut tmp);
            f(t + C2 * h, &tmp, &mut k[1]);
            stage(&k, &[A31, A32], &mut tmp);
            f(t + C3 * h, &tmp, &mut k[2]);
            stage(&k, &[A41, A42, A43], &mut tmp);
            f(t + C4 * h, &tmp, &mut k[3]);
            stage(&k, &[A51, A52, A53, A54], &mut tmp);
            f(t + C5 * h, &tmp, &mut k[4]);
            stage(&k, &[A61, A62, A63, A64, A65], &mut tmp);
            f(t + h, &tmp, &mut k[5]);
            for i in 0..n {
                ynew[i] = y[i] + h * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
            }
            f(t + h, &ynew, &mut k[6]);
            let mut err: f64 = 0.0;
            for i in 0..n {
                let e = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() {
                h *= 0.25;
                if h.abs() < opts.h_min {
                    return Err(Error::NonConvergence(format!("ODE step underflow at t={t}")));
                }
                continue;
            }
            if err <= 1.0 {
                t = if last { target } else { t + h };
                y.copy_from_slice(&ynew);
                let k6 = k[6].clone();
                k[0].copy_from_slice(&k6);
                if !stop(t, &y) {
                    out.push(y.clone());
                    return Ok(out);
                }
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 && last {
                // keep the natural step for the next interval
                h = if h_natural.abs() > h.abs() { h_natural } else { h * fac };
                break;
            }
            h *= fac;
            if h.abs() < opts.h_min {
                return Err(Error::NonConvergence(format!("ODE step underflow at t={t}")));
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Convenience wrapper without an early-stop predicate.
pub fn integrate_to<F>(f: F, t0: f64, y0: &[f64], outputs: &[f64], opts: &OdeOptions) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    integrate(f, t0, y0, outputs, opts, |_, _| true)
}
