//! Log-density and log-mass evaluators for every distribution the demos
//! use, each paired with analytic moments in the tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{log_binomial_coeff, log_gamma_unchecked, std_normal_cdf};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// A symmetric Dirichlet over `k` bins with concentration `alpha`.
///
/// Construct from an aggregation constant `C` (giving `alpha = C / k`) when
/// the prior must stay consistent under bin merging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletSpec {
    k: usize,
    alpha: f64,
}

impl DirichletSpec {
    pub fn new(k: usize, alpha: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::domain(format!("DirichletSpec needs K >= 2, got {k}")));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::domain(format!(
                "DirichletSpec needs alpha > 0, got {alpha}"
            )));
        }
        Ok(DirichletSpec { k, alpha })
    }

    /// Aggregation-consistent construction: `alpha = C / k`.
    pub fn from_aggregation_constant(c: f64, k: usize) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::domain(format!(
                "aggregation constant must be positive, got {c}"
            )));
        }
        DirichletSpec::new(k, c / k as f64)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Total concentration `K * alpha` (the aggregation constant when the
    /// spec was built from one).
    pub fn total_concentration(&self) -> f64 {
        self.alpha * self.k as f64
    }

    pub fn alpha_vector(&self) -> Vec<f64> {
        vec![self.alpha; self.k]
    }

    /// Mean of any single component: `1 / K`.
    pub fn component_mean(&self) -> f64 {
        1.0 / self.k as f64
    }

    /// Variance of any single component:
    /// `(1/K)(1 - 1/K) / (K alpha + 1)`.
    pub fn component_variance(&self) -> f64 {
        let m = self.component_mean();
        m * (1.0 - m) / (self.total_concentration() + 1.0)
    }
}

/// Negative binomial parameters: `r` target successes (possibly
/// non-integer) and success probability `theta` in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegBinomialParams {
    r: f64,
    theta: f64,
}

impl NegBinomialParams {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::domain(format!("NB needs r > 0, got {r}")));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::domain(format!("NB needs theta in (0, 1), got {theta}")));
        }
        Ok(NegBinomialParams { r, theta })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Mean failure count `r (1 - theta) / theta`.
    pub fn mean(&self) -> f64 {
        self.r * (1.0 - self.theta) / self.theta
    }

    /// Variance `r (1 - theta) / theta^2`.
    pub fn variance(&self) -> f64 {
        self.mean() / self.theta
    }
}

/// ln of the binomial PMF for `n` successes in `big_n` trials.
///
/// The endpoints `theta = 0` and `theta = 1` are handled by their exact
/// limits (all mass at `n = 0` or `n = big_n`) so that grid scans may touch
/// them.
pub fn binomial_log_pmf(n: u64, big_n: u64, theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::domain(format!(
            "binomial theta must lie in [0, 1], got {theta}"
        )));
    }
    let coeff = log_binomial_coeff(big_n, n)?;
    if theta == 0.0 {
        return Ok(if n == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    if theta == 1.0 {
        return Ok(if n == big_n { 0.0 } else { f64::NEG_INFINITY });
    }
    Ok(coeff + n as f64 * theta.ln() + (big_n - n) as f64 * (1.0 - theta).ln())
}

/// ln of the negative binomial PMF for `n` failures before the `r`-th
/// success; non-integer `r` handled through `log_gamma`.
pub fn neg_binomial_log_pmf(n: u64, params: NegBinomialParams) -> f64 {
    let (r, theta) = (params.r(), params.theta());
    let nf = n as f64;
    log_gamma_unchecked(nf + r) - log_gamma_unchecked(nf + 1.0) - log_gamma_unchecked(r)
        + nf * (1.0 - theta).ln()
        + r * theta.ln()
}

/// ln of the Poisson PMF with expected count `mu`; `mu = 0` puts all mass
/// at `n = 0`.
pub fn poisson_log_pmf(n: u64, mu: f64) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::domain(format!("poisson mean must be >= 0, got {mu}")));
    }
    if mu == 0.0 {
        return Ok(if n == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    Ok(n as f64 * mu.ln() - mu - log_gamma_unchecked(n as f64 + 1.0))
}

/// ln N(x; mu, sigma).
pub fn normal_log_pdf(x: f64, mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::domain(format!("normal sigma must be > 0, got {sigma}")));
    }
    let z = (x - mu) / sigma;
    Ok(-0.5 * z * z - sigma.ln() - 0.5 * LN_2PI)
}

/// ln of the gamma density in shape/rate form at `a`.
///
/// Outside the support (`a < 0`) the log-density is −∞; at `a = 0` the
/// shape < 1 boundary diverges and +∞ is returned as the true limit.
pub fn gamma_log_pdf(a: f64, shape: f64, rate: f64) -> Result<f64> {
    if !(shape > 0.0) || !(rate > 0.0) {
        return Err(Error::domain(format!(
            "gamma needs shape > 0 and rate > 0, got shape = {shape}, rate = {rate}"
        )));
    }
    if a < 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if a == 0.0 {
        return Ok(match shape.partial_cmp(&1.0).expect("shape is finite") {
            std::cmp::Ordering::Less => f64::INFINITY,
            std::cmp::Ordering::Equal => rate.ln(),
            std::cmp::Ordering::Greater => f64::NEG_INFINITY,
        });
    }
    Ok(shape * rate.ln() - log_gamma_unchecked(shape) + (shape - 1.0) * a.ln() - rate * a)
}

fn simplex_check(f: &[f64]) -> Result<()> {
    if f.len() < 2 {
        return Err(Error::domain("simplex vector needs at least 2 components"));
    }
    let mut total = 0.0;
    for &v in f {
        if !(0.0..=1.0 + 1e-9).contains(&v) {
            return Err(Error::domain(format!("simplex component out of range: {v}")));
        }
        total += v;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!(
            "simplex vector sums to {total}, beyond the 1e-9 tolerance"
        )));
    }
    Ok(())
}

/// ln of the symmetric Dirichlet density at a point on the simplex
/// (tolerance 1e-9 on the sum constraint).
pub fn dirichlet_log_pdf(f: &[f64], spec: DirichletSpec) -> Result<f64> {
    if f.len() != spec.k() {
        return Err(Error::domain(format!(
            "expected {} components, got {}",
            spec.k(),
            f.len()
        )));
    }
    simplex_check(f)?;
    let alpha = spec.alpha();
    let mut lp = log_gamma_unchecked(spec.total_concentration())
        - spec.k() as f64 * log_gamma_unchecked(alpha);
    for &v in f {
        if v == 0.0 {
            if alpha < 1.0 {
                return Ok(f64::INFINITY);
            }
            if alpha > 1.0 {
                return Ok(f64::NEG_INFINITY);
            }
            // alpha == 1: zero exponent contributes nothing
        } else {
            lp += (alpha - 1.0) * v.ln();
        }
    }
    Ok(lp)
}

/// ln of the multinomial likelihood (multinomial coefficient included).
pub fn multinomial_log_like(counts: &[u64], f: &[f64]) -> Result<f64> {
    if counts.len() != f.len() {
        return Err(Error::domain(format!(
            "counts ({}) and probabilities ({}) disagree in length",
            counts.len(),
            f.len()
        )));
    }
    simplex_check(f)?;
    let total: u64 = counts.iter().sum();
    let mut ll = log_gamma_unchecked(total as f64 + 1.0);
    for (&n, &fk) in counts.iter().zip(f) {
        ll -= log_gamma_unchecked(n as f64 + 1.0);
        if n > 0 {
            if fk == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            ll += n as f64 * fk.ln();
        }
    }
    Ok(ll)
}

/// Beta shape parameters of the marginal for one component of a symmetric
/// Dirichlet: `Beta(alpha, (K-1) alpha)` for every bin, mean `1/K`.
pub fn dirichlet_marginal_beta(spec: DirichletSpec, component: usize) -> Result<(f64, f64)> {
    if component == 0 || component > spec.k() {
        return Err(Error::domain(format!(
            "component index {component} outside 1..={}",
            spec.k()
        )));
    }
    let a = spec.alpha();
    Ok((a, (spec.k() as f64 - 1.0) * a))
}

/// ln of the chi density: the length of an `n_dim`-dimensional standard
/// normal vector.
pub fn chi_log_pdf(chi: f64, n_dim: u32) -> Result<f64> {
    if n_dim < 1 {
        return Err(Error::domain("chi distribution needs dimension >= 1"));
    }
    if chi < 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let nf = n_dim as f64;
    let log_norm = (1.0 - nf / 2.0) * std::f64::consts::LN_2 - log_gamma_unchecked(nf / 2.0);
    if chi == 0.0 {
        return Ok(match n_dim {
            1 => log_norm, // half-normal at the origin
            _ => f64::NEG_INFINITY,
        });
    }
    Ok(log_norm + (nf - 1.0) * chi.ln() - chi * chi / 2.0)
}

/// CDF of max |eps_i| over an `n_dim`-dimensional standard normal vector:
/// `(2 Phi(m) - 1)^N`.
pub fn max_abs_coord_cdf(m: f64, n_dim: u32) -> f64 {
    if m <= 0.0 {
        return 0.0;
    }
    let p_one = 2.0 * std_normal_cdf(m) - 1.0;
    p_one.powi(n_dim as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{log_sum_exp, RngStream};

    #[test]
    fn binomial_normalizes() {
        let terms: Vec<f64> = (0..=20)
            .map(|n| binomial_log_pmf(n, 20, 0.5).unwrap())
            .collect();
        let total = log_sum_exp(&terms).unwrap();
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn binomial_grid_argmax_is_mle() {
        // Likelihood in theta for n = 13 / N = 20 peaks at 0.65.
        let steps = 2000usize;
        let (mut best_theta, mut best) = (0.0, f64::NEG_INFINITY);
        for i in 0..=steps {
            let theta = i as f64 / steps as f64;
            let v = binomial_log_pmf(13, 20, theta).unwrap();
            if v > best {
                best = v;
                best_theta = theta;
            }
        }
        assert!((best_theta - 0.65).abs() <= 1.0 / steps as f64 + 1e-12);
    }

    #[test]
    fn binomial_exact_point() {
        // ln p(10 | 20, 1/2) = ln C(20,10) - 20 ln 2 by integer arithmetic.
        let mut c: u128 = 1;
        for i in 0..10u128 {
            c = c * (20 - i) / (i + 1);
        }
        let expect = (c as f64).ln() - 20.0 * std::f64::consts::LN_2;
        let got = binomial_log_pmf(10, 20, 0.5).unwrap();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn binomial_endpoint_limits() {
        assert_eq!(binomial_log_pmf(0, 5, 0.0).unwrap(), 0.0);
        assert_eq!(binomial_log_pmf(3, 5, 0.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(binomial_log_pmf(5, 5, 1.0).unwrap(), 0.0);
        assert!(binomial_log_pmf(1, 5, 1.2).is_err());
    }

    #[test]
    fn nb_zero_count_reads_off_pmf() {
        let p = NegBinomialParams::new(2.5, 0.3).unwrap();
        let v = neg_binomial_log_pmf(0, p);
        assert!((v - 2.5 * 0.3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn nb_mean_matches_mass_weighted_sum() {
        let p = NegBinomialParams::new(4.0, 0.35).unwrap();
        let cap = (p.mean() + 20.0 * p.variance().sqrt()).ceil() as u64;
        let mut mean = 0.0;
        let mut mass = 0.0;
        for n in 0..=cap {
            let w = neg_binomial_log_pmf(n, p).exp();
            mean += n as f64 * w;
            mass += w;
        }
        assert!((mass - 1.0).abs() < 1e-10, "truncated mass {mass}");
        assert!((mean - p.mean()).abs() < 1e-8);
    }

    #[test]
    fn nb_poisson_limit_pointwise() {
        // theta -> 1 with mean fixed at 3.0.
        let mu = 3.0;
        let theta = 0.9999;
        let p = NegBinomialParams::new(mu * theta / (1.0 - theta), theta).unwrap();
        let mut sup = 0.0f64;
        for n in 0..=60 {
            let gap = (neg_binomial_log_pmf(n, p).exp()
                - poisson_log_pmf(n, mu).unwrap().exp())
            .abs();
            sup = sup.max(gap);
        }
        assert!(sup < 1e-3, "sup gap {sup}");
    }

    #[test]
    fn nb_poisson_total_variation_decreases() {
        for &mu in &[0.5, 5.0, 50.0] {
            let mut last = f64::INFINITY;
            for &theta in &[0.9, 0.99, 0.999, 0.9999] {
                let p = NegBinomialParams::new(mu * theta / (1.0 - theta), theta).unwrap();
                let cap = (mu + 20.0 * (2.0 * mu).sqrt()).ceil() as u64 + 20;
                let tv: f64 = (0..=cap)
                    .map(|n| {
                        (neg_binomial_log_pmf(n, p).exp()
                            - poisson_log_pmf(n, mu).unwrap().exp())
                        .abs()
                    })
                    .sum::<f64>()
                    / 2.0;
                assert!(tv < last, "TV not decreasing at mu = {mu}, theta = {theta}");
                last = tv;
            }
        }
    }

    #[test]
    fn poisson_values_and_normalization() {
        assert!((poisson_log_pmf(0, 1.0).unwrap() + 1.0).abs() < 1e-15);
        let terms: Vec<f64> = (0..=200).map(|n| poisson_log_pmf(n, 50.0).unwrap()).collect();
        assert!(log_sum_exp(&terms).unwrap().abs() < 1e-10);
        assert_eq!(poisson_log_pmf(0, 0.0).unwrap(), 0.0);
        assert!(poisson_log_pmf(1, -2.0).is_err());
    }

    #[test]
    fn poisson_mc_variance() {
        let mut rng = RngStream::new(11, 2);
        let m = 100_000;
        let xs: Vec<f64> = (0..m).map(|_| rng.poisson(7.0).unwrap() as f64).collect();
        let mean = xs.iter().sum::<f64>() / m as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
        // se of the variance of a Poisson(7) sample, via 4th-moment formula
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / m as f64;
        let se = ((m4 - var * var) / m as f64).sqrt();
        assert!((var - 7.0).abs() < 4.0 * se);
    }

    #[test]
    fn multinomial_mle_is_count_fraction() {
        let counts = [3u64, 2, 5];
        let n: u64 = counts.iter().sum();
        let mle: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let at_mle = multinomial_log_like(&counts, &mle).unwrap();
        // Perturbations along the simplex never beat the closed-form MLE.
        for eps in [0.05, -0.05] {
            let perturbed = [mle[0] + eps, mle[1] - eps, mle[2]];
            let v = multinomial_log_like(&counts, &perturbed).unwrap();
            assert!(v < at_mle);
        }
    }

    #[test]
    fn dirichlet_flat_case_and_marginals() {
        let spec = DirichletSpec::new(2, 1.0).unwrap();
        // K = 2, alpha = 1 is uniform on the unit interval: log-pdf 0.
        let v = dirichlet_log_pdf(&[0.3, 0.7], spec).unwrap();
        assert!(v.abs() < 1e-12);
        assert_eq!(dirichlet_marginal_beta(spec, 1).unwrap(), (1.0, 1.0));

        for k in [2usize, 5, 30] {
            let spec = DirichletSpec::new(k, 0.7).unwrap();
            let (a, b) = dirichlet_marginal_beta(spec, k).unwrap();
            let mean = a / (a + b);
            assert!((mean - 1.0 / k as f64).abs() < 1e-14);
        }
        assert!(dirichlet_marginal_beta(spec, 0).is_err());
        assert!(dirichlet_marginal_beta(spec, 3).is_err());
    }

    #[test]
    fn dirichlet_component_variance_against_mc() {
        // K = 30, alpha = 2/30: variance (1/K)(1-1/K)/(C+1) with C = 2.
        let spec = DirichletSpec::from_aggregation_constant(2.0, 30).unwrap();
        let expect_var = spec.component_variance();
        assert!((expect_var - (1.0 / 30.0) * (29.0 / 30.0) / 3.0).abs() < 1e-15);

        let m = 100_000;
        let mut rng = RngStream::new(314, 0);
        let alpha = spec.alpha_vector();
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..m {
            let f0 = rng.dirichlet(&alpha).unwrap()[0];
            s1 += f0;
            s2 += f0 * f0;
        }
        let mean = s1 / m as f64;
        let var = s2 / m as f64 - mean * mean;
        // 4 MC standard errors on the variance (Beta 4th-moment bound,
        // approximated by var * sqrt(2 + excess) / sqrt(m): use a generous
        // empirical proxy of 3 * var / sqrt(m)).
        let tol = 4.0 * 3.0 * expect_var / (m as f64).sqrt();
        assert!((var - expect_var).abs() < tol, "var {var} vs {expect_var}");
    }

    #[test]
    fn dirichlet_aggregation_closure_moments() {
        // Merging adjacent components of Dirichlet(alpha) draws yields a
        // Dirichlet with summed concentrations: checked through the first
        // two moments of each merged component.
        let alpha = [0.4, 1.2, 2.0, 0.7, 3.0, 1.1];
        let merged_alpha = [1.6, 2.7, 4.1];
        let a0: f64 = alpha.iter().sum();
        let m = 100_000;
        let mut rng = RngStream::new(2718, 4);
        let mut sums = [[0.0f64; 2]; 3];
        for _ in 0..m {
            let f = rng.dirichlet(&alpha).unwrap();
            for j in 0..3 {
                let v = f[2 * j] + f[2 * j + 1];
                sums[j][0] += v;
                sums[j][1] += v * v;
            }
        }
        for j in 0..3 {
            let mean = sums[j][0] / m as f64;
            let var = sums[j][1] / m as f64 - mean * mean;
            let em = merged_alpha[j] / a0;
            let ev = em * (1.0 - em) / (a0 + 1.0);
            let se_mean = ev.sqrt() / (m as f64).sqrt();
            assert!((mean - em).abs() < 4.0 * se_mean, "component {j} mean");
            // variance se proxy via 4th moment of a bounded variable
            assert!((var - ev).abs() < 4.0 * 3.0 * ev / (m as f64).sqrt(), "component {j} var");
        }
    }

    #[test]
    fn off_simplex_rejected() {
        let spec = DirichletSpec::new(3, 2.0).unwrap();
        assert!(dirichlet_log_pdf(&[0.5, 0.5, 0.1], spec).is_err());
        assert!(multinomial_log_like(&[1, 2, 3], &[0.2, 0.2, 0.2]).is_err());
    }

    #[test]
    fn chi_pdf_half_normal_and_mode() {
        // N = 1 reduces to a half-normal.
        for &x in &[0.0, 0.5, 1.0, 2.5] {
            let expect = (2.0f64).ln() + normal_log_pdf(x, 0.0, 1.0).unwrap();
            assert!((chi_log_pdf(x, 1).unwrap() - expect).abs() < 1e-12);
        }
        // Mode at sqrt(N - 1), by stationarity of the log-density.
        for &n in &[2u32, 10, 30] {
            let mode = ((n - 1) as f64).sqrt();
            let h = 1e-5;
            let d = (chi_log_pdf(mode + h, n).unwrap() - chi_log_pdf(mode - h, n).unwrap())
                / (2.0 * h);
            assert!(d.abs() < 1e-6, "gradient {d} at claimed mode, N = {n}");
        }
    }

    #[test]
    fn chi_pdf_normalizes_up_to_n_100() {
        use crate::kernel::QuadratureRule;
        for &n in &[1u32, 5, 30, 100] {
            let hi = (n as f64).sqrt() + 10.0;
            let rule = QuadratureRule::trapezoid(20_001).unwrap();
            let v = rule
                .integrate_log(0.0, hi, |x| chi_log_pdf(x, n).unwrap())
                .unwrap();
            assert!(v.abs() < 1e-8, "N = {n}: log mass {v}");
        }
    }

    #[test]
    fn max_abs_coord_cdf_edges() {
        assert_eq!(max_abs_coord_cdf(0.0, 30), 0.0);
        let m = 1.3;
        let expect = 2.0 * std_normal_cdf(m) - 1.0;
        assert!((max_abs_coord_cdf(m, 1) - expect).abs() < 1e-14);
        assert!(max_abs_coord_cdf(9.0, 30) <= 1.0);
    }

    #[test]
    fn gamma_pdf_moments_against_mc() {
        let beta = 3.0;
        let m = 100_000;
        let mut rng = RngStream::new(777, 1);
        let xs: Vec<f64> = (0..m).map(|_| rng.gamma(beta, beta).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / m as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / m as f64;
        let se_var = ((m4 - var * var) / m as f64).sqrt();
        assert!((mean - 1.0).abs() < 4.0 / (beta * m as f64).sqrt());
        assert!((var - 1.0 / beta).abs() < 4.0 * se_var);
        // density normalizes on a generous window
        use crate::kernel::QuadratureRule;
        let rule = QuadratureRule::trapezoid(20_001).unwrap();
        let v = rule
            .integrate_log(0.0, 12.0, |a| gamma_log_pdf(a, beta, beta).unwrap())
            .unwrap();
        assert!(v.abs() < 1e-8);
    }
}
