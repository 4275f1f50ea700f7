//! Simulation laboratory for adaptive LQR control.
//!
//! The crate implements an adaptive LQR controller built on direct
//! model-reference adaptive control (MRAC-LQR): a weighted recursive
//! least-squares estimator with parameter projection, an epoch-based
//! reference-model update driven by certainty-equivalence LQR synthesis, and
//! a deterministic sinusoidal (or Gaussian) exploration signal. Around the
//! controller sit the ground-truth benchmark plants, baseline controllers,
//! and a Monte Carlo regret harness with percentile aggregation, CSV/JSON
//! export, and SVG plotting.

pub mod baselines;
pub mod config;
pub mod control_math;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod mrac;
pub mod systems;

pub use error::{Error, Result};
