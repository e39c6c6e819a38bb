//! Run configuration shared by the pipelines and the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layer::LayerOptions;
use crate::reduced::{ReducedOptions, WeightedNormSpec, EPS_MAX, R1};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub s: f64,
    pub eps: f64,
    /// orders tabulated by the constants report
    pub s_grid: Vec<f64>,
    // layer grid
    pub z_max: f64,
    pub layer_nodes: usize,
    pub layer_tol: f64,
    pub continuation: bool,
    // reduced grid
    /// outer radius as a multiple of `r̃_ε`
    pub r_out_factor: f64,
    pub per_efold: usize,
    pub neck_nodes: usize,
    // cut-offs and exponents
    pub delta_bar: f64,
    pub r_bar: f64,
    pub delta0: f64,
    pub r_zeta: f64,
    /// unset means `1.1`, or `1 + 0.3 α_curv/s` when `1.1` is out of range
    pub tau: Option<f64>,
    /// Hölder exponent of the curvature; unset means `min(1/4, s - 1/2)`
    pub alpha_curv: Option<f64>,
    /// Hölder exponent of the weighted norms
    pub alpha_norm: f64,
    pub gamma: f64,
    pub reduced_tol: f64,
    // verification
    pub mc_samples: usize,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            s: 0.75,
            eps: 1e-2,
            s_grid: (0..9).map(|k| (55 + 5 * k) as f64 / 100.0).collect(),
            z_max: 100.0,
            layer_nodes: 800,
            layer_tol: 1e-10,
            continuation: false,
            r_out_factor: 200.0,
            per_efold: 250,
            neck_nodes: 400,
            delta_bar: 0.1,
            r_bar: 10.0,
            delta0: 0.5,
            r_zeta: 20.0,
            tau: None,
            alpha_curv: None,
            alpha_norm: 0.5,
            gamma: 2.0,
            reduced_tol: 1e-8,
            mc_samples: 400_000,
            out_dir: PathBuf::from("out"),
            seed: 7,
        }
    }
}

fn open_range(name: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if v > lo && v < hi {
        Ok(())
    } else {
        Err(Error::Config(format!("{name}={v} must lie in ({lo}, {hi})")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name}={v} must be positive")))
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fills the order-dependent defaults so reports show the values used.
    pub fn resolved(mut self) -> Self {
        let s = self.s;
        let a = *self.alpha_curv.get_or_insert(0.25f64.min(s - 0.5));
        self.tau.get_or_insert(if 1.1 < 1.0 + a / (2.0 * s) { 1.1 } else { 1.0 + 0.3 * a / s });
        self
    }

    pub fn alpha_curv(&self) -> f64 {
        self.alpha_curv.unwrap_or(0.25f64.min(self.s - 0.5))
    }

    pub fn tau(&self) -> f64 {
        self.clone().resolved().tau.expect("filled by resolved")
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.s;
        let (alpha_curv, tau) = (self.alpha_curv(), self.tau());
        open_range("s", s, 0.5, 1.0)?;
        for &g in &self.s_grid {
            open_range("s_grid entry", g, 0.5, 1.0)?;
        }
        if !(self.eps > 0.0 && self.eps <= EPS_MAX) {
            return Err(Error::Config(format!("eps={} must lie in (0, {EPS_MAX}]", self.eps)));
        }
        open_range("alpha_curv", alpha_curv, 0.0, 2.0 * s - 1.0)?;
        open_range("tau", tau, 1.0, 1.0 + alpha_curv / (2.0 * s))?;
        open_range("alpha_norm", self.alpha_norm, 0.0, 1.0)?;
        let cap = 2.0 + (2.0 * s - 1.0) / (2.0 * s + 1.0);
        if !(self.gamma <= cap) {
            return Err(Error::Config(format!("gamma={} must not exceed 2 + (2s-1)/(2s+1) = {cap}", self.gamma)));
        }
        for (n, v) in [
            ("z_max", self.z_max),
            ("delta_bar", self.delta_bar),
            ("r_bar", self.r_bar),
            ("delta0", self.delta0),
            ("r_zeta", self.r_zeta),
            ("layer_tol", self.layer_tol),
            ("reduced_tol", self.reduced_tol),
            ("r_out_factor", self.r_out_factor),
        ] {
            positive(n, v)?;
        }
        if 2.0 * self.r_zeta > self.z_max {
            return Err(Error::Config(format!("r_zeta={} must satisfy 2 r_zeta <= z_max = {}", self.r_zeta, self.z_max)));
        }
        if self.mc_samples < 1000 {
            return Err(Error::Config(format!("mc_samples={} must be at least 1000", self.mc_samples)));
        }
        Ok(())
    }

    pub fn layer_options(&self) -> LayerOptions {
        LayerOptions { z_max: self.z_max, node_count: self.layer_nodes, tol: self.layer_tol, continuation: self.continuation }
    }

    pub fn reduced_options(&self) -> Result<ReducedOptions> {
        Ok(ReducedOptions {
            delta0: self.delta0,
            r_bar: self.r_bar,
            r_out_factor: self.r_out_factor,
            per_efold: self.per_efold,
            neck_nodes: self.neck_nodes,
            norm: WeightedNormSpec::new(self.s, self.gamma, self.alpha_norm, R1)?,
            ..Default::default()
        })
    }
}
