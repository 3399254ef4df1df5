//! Deterministic random variate generation.
//!
//! Every stochastic demo owns an [`RngStream`] identified by `(seed,
//! stream_id)`. Identical identifiers replay identical sequences; distinct
//! stream ids from one seed give statistically independent substreams, which
//! is what lets concurrent demos share a single configured seed.

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Gamma, Normal, Poisson};

use crate::error::{Error, Result};

/// A seeded, splittable variate stream backed by ChaCha12.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    /// A fresh stream with the same seed but a different stream id.
    /// The parent stream's position is unaffected.
    pub fn substream(&self, stream_id: u64) -> Self {
        RngStream::new(self.seed, stream_id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform draw on [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self, mu: f64, sigma: f64) -> Result<f64> {
        if !(sigma > 0.0) {
            return Err(Error::domain(format!("normal requires sigma > 0, got {sigma}")));
        }
        let d = Normal::new(mu, sigma).expect("validated parameters");
        Ok(d.sample(&mut self.rng))
    }

    pub fn standard_normal(&mut self) -> f64 {
        Normal::new(0.0, 1.0)
            .expect("constant parameters")
            .sample(&mut self.rng)
    }

    /// Gamma draw in shape/rate form; valid for shape below and above 1.
    pub fn gamma(&mut self, shape: f64, rate: f64) -> Result<f64> {
        if !(shape > 0.0) || !(rate > 0.0) {
            return Err(Error::domain(format!(
                "gamma requires shape > 0 and rate > 0, got shape = {shape}, rate = {rate}"
            )));
        }
        let d = Gamma::new(shape, 1.0 / rate).expect("validated parameters");
        Ok(d.sample(&mut self.rng))
    }

    pub fn poisson(&mut self, lambda: f64) -> Result<u64> {
        if !(lambda >= 0.0) {
            return Err(Error::domain(format!("poisson requires lambda >= 0, got {lambda}")));
        }
        if lambda == 0.0 {
            return Ok(0);
        }
        let d = Poisson::new(lambda).expect("validated parameters");
        Ok(d.sample(&mut self.rng) as u64)
    }

    pub fn binomial(&mut self, trials: u64, theta: f64) -> Result<u64> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::domain(format!(
                "binomial requires theta in (0, 1], got {theta}"
            )));
        }
        let d = Binomial::new(trials, theta).expect("validated parameters");
        Ok(d.sample(&mut self.rng))
    }

    /// Dirichlet draw as a normalized vector of gamma variates.
    pub fn dirichlet(&mut self, alpha: &[f64]) -> Result<Vec<f64>> {
        if alpha.len() < 2 {
            return Err(Error::domain("dirichlet requires at least 2 components"));
        }
        let mut draw = Vec::with_capacity(alpha.len());
        let mut total = 0.0;
        for &a in alpha {
            let g = self.gamma(a, 1.0)?;
            total += g;
            draw.push(g);
        }
        if total <= 0.0 {
            // All gamma draws underflowed (possible only for tiny alpha);
            // retry rather than emit NaNs.
            return self.dirichlet(alpha);
        }
        for g in &mut draw {
            *g /= total;
        }
        Ok(draw)
    }

    /// Negative binomial (failures before the r-th success) via the
    /// gamma–Poisson mixture; r may be non-integer.
    pub fn neg_binomial(&mut self, r: f64, theta: f64) -> Result<u64> {
        if !(r > 0.0) || !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::domain(format!(
                "neg_binomial requires r > 0 and theta in (0, 1], got r = {r}, theta = {theta}"
            )));
        }
        if theta == 1.0 {
            return Ok(0);
        }
        let mean_scale = (1.0 - theta) / theta;
        let lambda = self.gamma(r, 1.0 / mean_scale)?;
        self.poisson(lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    /// Monte Carlo standard error of the sample variance via the fourth
    /// central moment.
    fn var_se(xs: &[f64], mean: f64, var: f64) -> f64 {
        let n = xs.len() as f64;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        ((m4 - var * var) / n).sqrt()
    }

    #[test]
    fn replay_is_exact() {
        let mut a = RngStream::new(42, 3);
        let mut b = RngStream::new(42, 3);
        for _ in 0..200 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
        let xs: Vec<u64> = (0..50).map(|_| a.poisson(4.5).unwrap()).collect();
        let ys: Vec<u64> = (0..50).map(|_| b.poisson(4.5).unwrap()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn substreams_are_uncorrelated() {
        let m = 100_000;
        let mut s0 = RngStream::new(99, 0);
        let mut s1 = s0.substream(1);
        let xs: Vec<f64> = (0..m).map(|_| s0.uniform()).collect();
        let ys: Vec<f64> = (0..m).map(|_| s1.uniform()).collect();
        let (mx, vx) = mean_var(&xs);
        let (my, vy) = mean_var(&ys);
        let cov = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / (m as f64 - 1.0);
        let corr = cov / (vx * vy).sqrt();
        assert!(
            corr.abs() < 3.0 / (m as f64).sqrt(),
            "cross-stream correlation {corr} too large"
        );
    }

    #[test]
    fn moment_checks_all_distributions() {
        let m = 100_000usize;
        let mut rng = RngStream::new(20240101, 7);

        // normal(2, 3)
        let xs: Vec<f64> = (0..m).map(|_| rng.normal(2.0, 3.0).unwrap()).collect();
        let (mean, var) = mean_var(&xs);
        assert!((mean - 2.0).abs() < 4.0 * 3.0 / (m as f64).sqrt());
        assert!((var - 9.0).abs() < 4.0 * var_se(&xs, mean, var));

        // gamma(shape = beta, rate = beta) has unit mean, variance 1/beta
        let beta = 2.5;
        let xs: Vec<f64> = (0..m).map(|_| rng.gamma(beta, beta).unwrap()).collect();
        let (mean, var) = mean_var(&xs);
        assert!((mean - 1.0).abs() < 4.0 / (beta * m as f64).sqrt());
        assert!((var - 1.0 / beta).abs() < 4.0 * var_se(&xs, mean, var));

        // gamma with shape < 1 exercises the boosted sampler branch
        let xs: Vec<f64> = (0..m).map(|_| rng.gamma(0.4, 2.0).unwrap()).collect();
        let (mean, var) = mean_var(&xs);
        assert!((mean - 0.2).abs() < 4.0 * var.sqrt() / (m as f64).sqrt());
        assert!((var - 0.1).abs() < 4.0 * var_se(&xs, mean, var));

        // poisson(7): mean = var = 7
        let xs: Vec<f64> = (0..m).map(|_| rng.poisson(7.0).unwrap() as f64).collect();
        let (mean, var) = mean_var(&xs);
        assert!((mean - 7.0).abs() < 4.0 * 7.0f64.sqrt() / (m as f64).sqrt());
        assert!((var - 7.0).abs() < 4.0 * var_se(&xs, mean, var));

        // binomial(20, 0.65): mean 13, var 4.55
        let xs: Vec<f64> = (0..m)
            .map(|_| rng.binomial(20, 0.65).unwrap() as f64)
            .collect();
        let (mean, var) = mean_var(&xs);
        assert!((mean - 13.0).abs() < 4.0 * 4.55f64.sqrt() / (m as f64).sqrt());
        assert!((var - 4.55).abs() < 4.0 * var_se(&xs, mean, var));

        // neg binomial r = 3, theta = 0.4: mean r(1-θ)/θ = 4.5, var mean/θ = 11.25
        let xs: Vec<f64> = (0..m)
            .map(|_| rng.neg_binomial(3.0, 0.4).unwrap() as f64)
            .collect();
        let (mean, var) = mean_var(&xs);
        assert!((mean - 4.5).abs() < 4.0 * 11.25f64.sqrt() / (m as f64).sqrt());
        assert!((var - 11.25).abs() < 4.0 * var_se(&xs, mean, var));
    }

    #[test]
    fn dirichlet_draws_live_on_simplex() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..100 {
            let f = rng.dirichlet(&[0.2, 1.0, 3.0, 0.5]).unwrap();
            let total: f64 = f.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(f.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn parameter_validation() {
        let mut rng = RngStream::new(1, 0);
        assert!(rng.normal(0.0, 0.0).is_err());
        assert!(rng.gamma(-1.0, 1.0).is_err());
        assert!(rng.poisson(-0.5).is_err());
        assert!(rng.binomial(10, 0.0).is_err());
        assert!(rng.binomial(10, 1.5).is_err());
        assert!(rng.neg_binomial(0.0, 0.5).is_err());
    }
}
