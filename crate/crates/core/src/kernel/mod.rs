//! Numeric kernel: special functions, log-domain reductions, 1-D
//! optimization and quadrature, and seeded variate streams.

mod optimize;
mod rng;
mod special;

pub use optimize::maximize_1d;
pub use rng::RngStream;
pub use special::{log_binomial_coeff, log_gamma, log_sum_exp, std_normal_cdf};

pub(crate) use special::{log_gamma_unchecked, log_sum_exp_unchecked};

use crate::error::{Error, Result};

/// Node-placement scheme for a 1-D quadrature rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadScheme {
    Trapezoid,
    Midpoint,
}

/// A uniform 1-D quadrature rule over an interval, evaluated in the log
/// domain so that it composes with log-sum-exp reductions.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureRule {
    n: usize,
    scheme: QuadScheme,
}

impl QuadratureRule {
    pub fn new(n: usize, scheme: QuadScheme) -> Result<Self> {
        if n < 3 {
            return Err(Error::usage(format!(
                "quadrature rule needs at least 3 nodes, got {n}"
            )));
        }
        Ok(QuadratureRule { n, scheme })
    }

    pub fn trapezoid(n: usize) -> Result<Self> {
        QuadratureRule::new(n, QuadScheme::Trapezoid)
    }

    pub fn midpoint(n: usize) -> Result<Self> {
        QuadratureRule::new(n, QuadScheme::Midpoint)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn scheme(&self) -> QuadScheme {
        self.scheme
    }

    /// Strictly increasing nodes inside `[lo, hi]`.
    pub fn nodes(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self.scheme {
            QuadScheme::Trapezoid => {
                let h = (hi - lo) / (self.n - 1) as f64;
                (0..self.n)
                    .map(|i| if i == self.n - 1 { hi } else { lo + h * i as f64 })
                    .collect()
            }
            QuadScheme::Midpoint => {
                let h = (hi - lo) / self.n as f64;
                (0..self.n).map(|i| lo + h * (i as f64 + 0.5)).collect()
            }
        }
    }

    /// ln of the weight attached to each node.
    pub fn log_weights(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self.scheme {
            QuadScheme::Trapezoid => {
                let h = (hi - lo) / (self.n - 1) as f64;
                let lh = h.ln();
                let half = lh - std::f64::consts::LN_2;
                (0..self.n)
                    .map(|i| if i == 0 || i == self.n - 1 { half } else { lh })
                    .collect()
            }
            QuadScheme::Midpoint => {
                let lh = ((hi - lo) / self.n as f64).ln();
                vec![lh; self.n]
            }
        }
    }

    /// ln ∫ exp(log_f) over `[lo, hi]`, with `log_f` evaluated at the rule's
    /// nodes. NaN or +∞ from the integrand is a numeric error.
    pub fn integrate_log<F: FnMut(f64) -> f64>(
        &self,
        lo: f64,
        hi: f64,
        mut log_f: F,
    ) -> Result<f64> {
        if !(lo < hi) {
            return Err(Error::usage(format!(
                "integration interval needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        let nodes = self.nodes(lo, hi);
        let weights = self.log_weights(lo, hi);
        let mut terms = Vec::with_capacity(self.n);
        for (x, lw) in nodes.iter().zip(&weights) {
            let v = log_f(*x);
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::numeric(format!(
                    "log-integrand returned {v} at x = {x}"
                )));
            }
            terms.push(v + lw);
        }
        log_sum_exp(&terms)
    }
}
