//! Simulation and estimation toolkit for a dressed-state four-level
//! trapped-ion magnetometer.
//!
//! The crate is organised by capability:
//!
//! - [`physics`]: the four-level dressed-frame model, the fixed-step
//!   Schrödinger integrator and the dark-state survival probability.
//! - [`stirap`]: tanh-shaped dressing pulses and adiabatic preparation of
//!   the dark state.
//! - [`acquisition`]: shot-noise sampling and labelled datasets for averaged
//!   (Scenario i) and single-shot (Scenario ii) acquisition.
//! - [`regressor`]: a from-scratch multilayer perceptron trained by plain
//!   gradient descent, plus the regression metrics.
//! - [`bayes`]: a grid Bayesian estimator with a binomial likelihood.
//! - [`precision`]: quantum Fisher information and the shot-limited bound.
//! - [`cli`]: configuration, file formats and the command implementations
//!   behind the `ionsense` binary.
//!
//! Units are canonical throughout: time in milliseconds and angular
//! frequency in rad/ms. See [`units`] for the `2π×kHz` conversions used at
//! the boundaries.

pub mod acquisition;
pub mod bayes;
pub mod cli;
mod error;
pub mod physics;
pub mod precision;
pub mod regressor;
pub mod stirap;
pub mod units;

pub use error::{Error, Result};
