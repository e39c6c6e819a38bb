use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions};

/// State of `h'' + 2h' + h = h^{-2s}` in log-radial time.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EmdenFowlerState {
    pub t: f64,
    pub h: f64,
    pub h_prime: f64,
    pub hamiltonian: f64,
}

/// `½h'^2 + ½(h^2-1) + (h^{-(2s-1)} - 1)/(2s-1)`; decreases at rate `2h'^2`.
pub fn hamiltonian(s: f64, h: f64, hp: f64) -> f64 {
    0.5 * hp * hp + 0.5 * (h * h - 1.0) + (h.powf(1.0 - 2.0 * s) - 1.0) / (2.0 * s - 1.0)
}

impl EmdenFowlerState {
    pub fn new(s: f64, t: f64, h: f64, h_prime: f64) -> Self {
        Self { t, h, h_prime, hamiltonian: hamiltonian(s, h, h_prime) }
    }
}

/// Trajectory sampled every `dt` up to `t_max`.
pub fn emden_fowler_flow(s: f64, initial: EmdenFowlerState, t_max: f64, dt: f64) -> Result<Vec<EmdenFowlerState>> {
    if !(initial.h > 0.0) {
        return Err(Error::Domain("initial h must be positive".into()));
    }
    let n = ((t_max - initial.t) / dt).ceil().max(1.0) as usize;
    let outs: Vec<f64> = (1..=n).map(|k| (initial.t + k as f64 * dt).min(t_max)).collect();
    let mut collapsed = false;
    let ys = integrate(
        |_, y, d| {
            d[0] = y[1];
            d[1] = y[0].max(1e-300).powf(-2.0 * s) - 2.0 * y[1] - y[0];
        },
        initial.t,
        &[initial.h, initial.h_prime],
        &outs,
        &OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() },
        |_, y| {
            if y[0] <= 1e-8 {
                collapsed = true;
                false
            } else {
                true
            }
        },
    )?;
    if collapsed {
        return Err(Error::Degenerate("Emden–Fowler trajectory collapsed to h = 0".into()));
    }
    let mut out = vec![initial];
    out.extend(ys.iter().zip(&outs).map(|(y, &t)| EmdenFowlerState::new(s, t, y[0], y[1])));
    Ok(out)
}
