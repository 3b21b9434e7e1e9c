//! Neyman-Pearson detection of a sampled Gauss-Markov field in white
//! Gaussian noise.
//!
//! The crate computes the exact miss-probability error exponent of the
//! optimal detector as a function of sensor correlation and SNR, finds the
//! correlation (and hence the sensor spacing) that maximizes it, and checks
//! the asymptotics with a seeded Monte Carlo simulation of the detector.
//!
//! Module map:
//!
//! - [`field_model`]: diffusion field parameters and their AR(1) sampling.
//! - [`exponent`]: steady-state Riccati solution, innovation variances and
//!   the error exponent (closed form and spectral integral).
//! - [`scheduler`]: optimal correlation, optimal spacing, SNR regime.
//! - [`detector`]: Kalman-innovations log-likelihood ratio, threshold
//!   calibration and the perfectly correlated detector.
//! - [`montecarlo`]: path generation and miss-probability / slope estimates.
//! - [`cli`]: the `corrdetect` command-line front end.

pub mod cli;
pub mod detector;
pub mod error;
pub mod exponent;
pub mod field_model;
pub mod montecarlo;
pub mod normal;
pub mod rng;
pub mod scheduler;

pub use error::{Error, Result};
pub use exponent::{error_exponent, error_exponent_spectral, ExponentReport, Method};
pub use field_model::{DiffusionField, SampledModel};
pub use scheduler::{make_plan, Regime, SchedulePlan};
