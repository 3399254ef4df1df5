//! Marginalization-centric Bayesian inference on low-dimensional grids.
//!
//! The library realizes the law of total probability with dense,
//! deterministic quadrature: log-density grids carry likelihoods, priors,
//! and posteriors; a profile/marginal engine contrasts optimization with
//! marginalization over nuisance parameters; demo builders reproduce the
//! classic geometries (on/off, flaring, banana, Neyman–Scott, dim-source
//! photometry, Dirichlet aggregation, typical sets); and the discrepancy
//! module handles Gaussian overdispersion and gamma-multiplicative Poisson
//! discrepancy with its analytic negative-binomial marginalization.

pub mod demos;
pub mod discrepancy;
pub mod dist;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod profile;

pub use error::{Error, Result};
