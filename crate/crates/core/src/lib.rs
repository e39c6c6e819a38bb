//! Numerical toolkit for catenoid-shaped interfaces of the fractional
//! Allen–Cahn equation in three dimensions.

pub mod acceptance;
pub mod constants;
pub mod config;
pub mod cutoff;
pub mod error;
pub mod geometry;
pub mod layer;
pub mod ode;
pub mod output;
pub mod profile;
pub mod pv;
pub mod reduced;
pub mod quad;
pub mod spline;
pub mod verification;

pub use error::{Error, Result};
