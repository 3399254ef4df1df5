//! Profile vs. marginal likelihood for two-parameter models: the
//! conditional-MLE path, exact nuisance marginalization by quadrature, and
//! the Laplace width approximation that ties the two together.

use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::kernel::{log_sum_exp_unchecked, maximize_1d, QuadratureRule};

/// Default node count for nuisance-axis quadrature.
pub const DEFAULT_B_NODES: usize = 2001;

/// Relative tolerance of the conditional-MLE search, as a fraction of the
/// nuisance range.
const PATH_TOL_FRACTION: f64 = 1e-8;

/// Step fraction for the central second difference behind the Laplace
/// width.
const CURVATURE_STEP_FRACTION: f64 = 1e-4;

/// Log-integrand edge-to-peak ratio above which a nuisance quadrature
/// window is flagged as truncated (≈ the 1 - 1e-9 coverage requirement for
/// Gaussian-like slices).
const TRUNCATION_LOG_RATIO: f64 = -20.7; // ln(1e-9)

/// An evaluable joint log-likelihood over (interest, nuisance) with a
/// normalized nuisance prior and rectangular bounds.
pub struct TwoParamModel {
    log_joint: Box<dyn Fn(f64, f64) -> f64>,
    log_prior_b: Box<dyn Fn(f64) -> f64>,
    s_range: (f64, f64),
    b_range: (f64, f64),
    s_label: String,
    b_label: String,
}

impl TwoParamModel {
    /// Build a model with an explicit nuisance prior. The prior must
    /// integrate to 1 over the nuisance range (checked by an 8001-node
    /// trapezoid rule at tolerance 1e-8).
    pub fn new(
        log_joint: impl Fn(f64, f64) -> f64 + 'static,
        log_prior_b: impl Fn(f64) -> f64 + 'static,
        s_range: (f64, f64),
        b_range: (f64, f64),
        s_label: impl Into<String>,
        b_label: impl Into<String>,
    ) -> Result<Self> {
        if !(s_range.0 < s_range.1) || !(b_range.0 < b_range.1) {
            return Err(Error::usage("parameter ranges need lo < hi"));
        }
        let rule = QuadratureRule::trapezoid(8001)?;
        let mass = rule
            .integrate_log(b_range.0, b_range.1, &log_prior_b)?
            .exp();
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::usage(format!(
                "nuisance prior integrates to {mass} over the nuisance range, not 1"
            )));
        }
        Ok(TwoParamModel {
            log_joint: Box::new(log_joint),
            log_prior_b: Box::new(log_prior_b),
            s_range,
            b_range,
            s_label: s_label.into(),
            b_label: b_label.into(),
        })
    }

    /// Build a model with the default flat, range-normalized nuisance prior.
    pub fn with_flat_prior(
        log_joint: impl Fn(f64, f64) -> f64 + 'static,
        s_range: (f64, f64),
        b_range: (f64, f64),
        s_label: impl Into<String>,
        b_label: impl Into<String>,
    ) -> Result<Self> {
        let log_p = -(b_range.1 - b_range.0).ln();
        TwoParamModel::new(
            log_joint,
            move |_| log_p,
            s_range,
            b_range,
            s_label,
            b_label,
        )
    }

    pub fn log_joint(&self, s: f64, b: f64) -> f64 {
        (self.log_joint)(s, b)
    }

    pub fn log_prior_b(&self, b: f64) -> f64 {
        (self.log_prior_b)(b)
    }

    pub fn s_range(&self) -> (f64, f64) {
        self.s_range
    }

    pub fn b_range(&self) -> (f64, f64) {
        self.b_range
    }

    pub fn s_label(&self) -> &str {
        &self.s_label
    }

    pub fn b_label(&self) -> &str {
        &self.b_label
    }

    /// Default axis spanning the interest range.
    pub fn s_axis(&self, n: usize) -> Result<Axis> {
        Axis::linear(self.s_label.clone(), self.s_range.0, self.s_range.1, n)
    }
}

/// Conditional MLE of the nuisance parameter at one interest value.
fn b_hat_at(model: &TwoParamModel, s: f64, index: usize) -> Result<(f64, f64)> {
    let (b_lo, b_hi) = model.b_range;
    let tol = (b_hi - b_lo) * PATH_TOL_FRACTION;
    maximize_1d(|b| model.log_joint(s, b), b_lo, b_hi, tol).map_err(|e| match e {
        Error::Numeric(msg) if msg.contains("-inf everywhere") => Error::PathGap {
            index,
            s,
            message: "likelihood slice carries no mass in the nuisance range".into(),
        },
        other => other,
    })
}

/// The conditional-MLE path: `b̂(s)` for every node of the interest axis.
pub fn conditional_mle_path(model: &TwoParamModel, s_axis: &Axis) -> Result<Vec<f64>> {
    s_axis
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &s)| b_hat_at(model, s, i).map(|(b, _)| b))
        .collect()
}

/// Profile likelihood curve: the joint maximized over the nuisance at each
/// interest node.
#[derive(Debug, Clone)]
pub struct ProfileCurve {
    pub s: Vec<f64>,
    pub b_hat: Vec<f64>,
    pub log_profile: Vec<f64>,
}

pub fn profile_likelihood(model: &TwoParamModel, s_axis: &Axis) -> Result<ProfileCurve> {
    let s = s_axis.nodes();
    let mut b_hat = Vec::with_capacity(s.len());
    let mut log_profile = Vec::with_capacity(s.len());
    for (i, &si) in s.iter().enumerate() {
        let (b, v) = b_hat_at(model, si, i)?;
        b_hat.push(b);
        log_profile.push(v);
    }
    Ok(ProfileCurve {
        s,
        b_hat,
        log_profile,
    })
}

/// Marginal likelihood curve: the prior-weighted nuisance integral at each
/// interest node.
#[derive(Debug, Clone)]
pub struct MarginalCurve {
    pub s: Vec<f64>,
    pub log_marginal: Vec<f64>,
    /// Interest-node indices whose nuisance window failed the coverage
    /// check (integrand not negligible at a window edge).
    pub truncated_nodes: Vec<usize>,
}

pub fn marginal_likelihood_fn(
    model: &TwoParamModel,
    s_axis: &Axis,
    b_nodes: usize,
) -> Result<MarginalCurve> {
    let rule = QuadratureRule::trapezoid(b_nodes)?;
    let (b_lo, b_hi) = model.b_range;
    let nodes = rule.nodes(b_lo, b_hi);
    let weights = rule.log_weights(b_lo, b_hi);
    let s = s_axis.nodes();
    let mut log_marginal = Vec::with_capacity(s.len());
    let mut truncated_nodes = Vec::new();
    let mut terms = vec![0.0f64; nodes.len()];
    for (i, &si) in s.iter().enumerate() {
        let mut peak = f64::NEG_INFINITY;
        for (j, &b) in nodes.iter().enumerate() {
            let v = model.log_prior_b(b) + model.log_joint(si, b);
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::numeric(format!(
                    "marginal integrand returned {v} at (s, b) = ({si}, {b})"
                )));
            }
            if v > peak {
                peak = v;
            }
            terms[j] = v + weights[j];
        }
        let edge = (model.log_prior_b(b_lo) + model.log_joint(si, b_lo))
            .max(model.log_prior_b(b_hi) + model.log_joint(si, b_hi));
        if peak.is_finite() && edge - peak > TRUNCATION_LOG_RATIO {
            truncated_nodes.push(i);
        }
        log_marginal.push(log_sum_exp_unchecked(terms.iter().copied()));
    }
    Ok(MarginalCurve {
        s,
        log_marginal,
        truncated_nodes,
    })
}

/// Laplace approximation of the marginal likelihood:
/// `L_m(s) ≈ p(b̂_s) · L_p(s) · δb_s` with the Gaussian-equivalent width
/// `δb_s = √(2π) (−∂²ln L/∂b²)^{-1/2}` from a central second difference.
#[derive(Debug, Clone)]
pub struct LaplaceCurve {
    pub s: Vec<f64>,
    pub b_hat: Vec<f64>,
    pub delta_b: Vec<f64>,
    pub log_laplace: Vec<f64>,
}

pub fn laplace_marginal_approx(model: &TwoParamModel, s_axis: &Axis) -> Result<LaplaceCurve> {
    let profile = profile_likelihood(model, s_axis)?;
    laplace_from_profile(model, &profile)
}

fn laplace_from_profile(model: &TwoParamModel, profile: &ProfileCurve) -> Result<LaplaceCurve> {
    let (b_lo, b_hi) = model.b_range;
    let h = (b_hi - b_lo) * CURVATURE_STEP_FRACTION;
    let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let mut delta_b = Vec::with_capacity(profile.s.len());
    let mut log_laplace = Vec::with_capacity(profile.s.len());
    for i in 0..profile.s.len() {
        let s = profile.s[i];
        // Shift the stencil inward when the maximizer sits within one step
        // of the boundary.
        let center = profile.b_hat[i].clamp(b_lo + h, b_hi - h);
        let f0 = model.log_joint(s, center);
        let fm = model.log_joint(s, center - h);
        let fp = model.log_joint(s, center + h);
        let second = (fp - 2.0 * f0 + fm) / (h * h);
        if !second.is_finite() || second >= 0.0 {
            return Err(Error::Curvature {
                index: i,
                s,
                second_diff: second,
            });
        }
        let width = (2.0 * std::f64::consts::PI).sqrt() / (-second).sqrt();
        delta_b.push(width);
        log_laplace.push(
            model.log_prior_b(profile.b_hat[i]) + profile.log_profile[i] + half_ln_2pi
                - 0.5 * (-second).ln(),
        );
    }
    Ok(LaplaceCurve {
        s: profile.s.clone(),
        b_hat: profile.b_hat.clone(),
        delta_b,
        log_laplace,
    })
}

/// All aligned curves (s, log L_p, log L_m, log Laplace, b̂_s, δb_s) for
/// one model on one interest axis.
#[derive(Debug, Clone)]
pub struct MarginProfileCurves {
    pub s: Vec<f64>,
    pub b_hat: Vec<f64>,
    pub log_profile: Vec<f64>,
    pub log_marginal: Vec<f64>,
    pub log_laplace: Vec<f64>,
    pub delta_b: Vec<f64>,
    pub truncated_nodes: Vec<usize>,
}

pub fn analyze(model: &TwoParamModel, s_axis: &Axis, b_nodes: usize) -> Result<MarginProfileCurves> {
    let profile = profile_likelihood(model, s_axis)?;
    let marginal = marginal_likelihood_fn(model, s_axis, b_nodes)?;
    let laplace = laplace_from_profile(model, &profile)?;
    Ok(MarginProfileCurves {
        s: profile.s,
        b_hat: profile.b_hat,
        log_profile: profile.log_profile,
        log_marginal: marginal.log_marginal,
        log_laplace: laplace.log_laplace,
        delta_b: laplace.delta_b,
        truncated_nodes: marginal.truncated_nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::normal_log_pdf;

    fn factorized_model() -> TwoParamModel {
        // L(s, b) = g(s) h(b) with both factors Gaussian.
        TwoParamModel::with_flat_prior(
            |s, b| {
                normal_log_pdf(s, 1.0, 0.6).unwrap() + normal_log_pdf(b, -0.5, 0.9).unwrap()
            },
            (-3.0, 5.0),
            (-8.0, 7.0),
            "s",
            "b",
        )
        .unwrap()
    }

    #[test]
    fn prior_normalization_enforced() {
        let bad = TwoParamModel::new(
            |_, _| 0.0,
            |_| 0.0, // density 1 over a range of length 2: mass 2
            (0.0, 1.0),
            (0.0, 2.0),
            "s",
            "b",
        );
        assert!(bad.is_err());
        let ok = TwoParamModel::new(
            |_, _| 0.0,
            |b| normal_log_pdf(b, 0.0, 1.0).unwrap(),
            (0.0, 1.0),
            (-10.0, 10.0),
            "s",
            "b",
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn factorized_model_has_constant_path_and_proportional_curves() {
        let model = factorized_model();
        let axis = model.s_axis(101).unwrap();
        let path = conditional_mle_path(&model, &axis).unwrap();
        for &b in &path {
            assert!((b + 0.5).abs() < 1e-6, "path wandered to {b}");
        }
        let curves = analyze(&model, &axis, DEFAULT_B_NODES).unwrap();
        // profile, marginal, and laplace all proportional to g(s)
        let rp = curves.log_marginal[0] - curves.log_profile[0];
        let rl = curves.log_laplace[0] - curves.log_profile[0];
        for i in 1..axis.n {
            assert!((curves.log_marginal[i] - curves.log_profile[i] - rp).abs() < 1e-9);
            assert!((curves.log_laplace[i] - curves.log_profile[i] - rl).abs() < 1e-9);
        }
        assert!(curves.truncated_nodes.is_empty());
    }

    #[test]
    fn gaussian_slice_laplace_is_exact() {
        // Width w slice: delta_b = sqrt(2 pi) w and the Laplace value
        // matches the exact marginal.
        let w = 0.8f64;
        let model = TwoParamModel::with_flat_prior(
            move |s, b| {
                normal_log_pdf(s, 0.0, 1.0).unwrap() + normal_log_pdf(b, 1.0, w).unwrap()
            },
            (-3.0, 3.0),
            (1.0 - 9.0 * w, 1.0 + 9.0 * w),
            "s",
            "b",
        )
        .unwrap();
        let axis = model.s_axis(41).unwrap();
        let curves = analyze(&model, &axis, 4001).unwrap();
        let expect_width = (2.0 * std::f64::consts::PI).sqrt() * w;
        for i in 0..axis.n {
            assert!(
                (curves.delta_b[i] - expect_width).abs() < 1e-8,
                "width {} vs {expect_width}",
                curves.delta_b[i]
            );
            assert!(
                (curves.log_laplace[i] - curves.log_marginal[i]).abs() < 1e-8,
                "laplace {} vs exact {}",
                curves.log_laplace[i],
                curves.log_marginal[i]
            );
        }
    }

    #[test]
    fn dominance_and_prior_bound_hold() {
        let model = factorized_model();
        let axis = model.s_axis(61).unwrap();
        let curves = analyze(&model, &axis, 1001).unwrap();
        let (b_lo, b_hi) = model.b_range();
        let sup_prior = -(b_hi - b_lo).ln(); // flat prior: constant
        for (i, &s) in curves.s.iter().enumerate() {
            for j in 0..=200 {
                let b = b_lo + (b_hi - b_lo) * j as f64 / 200.0;
                assert!(
                    curves.log_profile[i] >= model.log_joint(s, b) - 1e-12,
                    "profile dominated at s = {s}, b = {b}"
                );
            }
            assert!(curves.log_marginal[i] <= curves.log_profile[i] + sup_prior + 1e-9);
        }
    }

    #[test]
    fn neyman_scott_pair_profile_and_marginal_shapes() {
        // Single pair (x, y): interest sigma, nuisance mu.
        let (x, y) = (0.7f64, 2.3f64);
        let d = x - y;
        let model = TwoParamModel::with_flat_prior(
            move |sigma: f64, mu: f64| {
                normal_log_pdf(x, mu, sigma).unwrap() + normal_log_pdf(y, mu, sigma).unwrap()
            },
            (0.05, 6.0),
            (-10.0, 10.0),
            "sigma",
            "mu",
        )
        .unwrap();
        let axis = model.s_axis(201).unwrap();
        let curves = analyze(&model, &axis, 4001).unwrap();
        for (i, &sigma) in curves.s.iter().enumerate() {
            // profile over mu: ∝ sigma^-2 exp(-d^2/(4 sigma^2))
            let expect_p = -2.0 * sigma.ln() - d * d / (4.0 * sigma * sigma);
            let gap_p = curves.log_profile[i] - expect_p;
            let gap_p0 = curves.log_profile[0] + 2.0 * curves.s[0].ln()
                + d * d / (4.0 * curves.s[0] * curves.s[0]);
            assert!(
                (gap_p - gap_p0).abs() < 1e-6,
                "profile shape off at sigma = {sigma}"
            );
            // marginal with flat mu prior: ∝ sigma^-1 exp(-d^2/(4 sigma^2))
            let expect_m = -sigma.ln() - d * d / (4.0 * sigma * sigma);
            let gap_m = curves.log_marginal[i] - expect_m;
            let gap_m0 = curves.log_marginal[0] + curves.s[0].ln()
                + d * d / (4.0 * curves.s[0] * curves.s[0]);
            assert!(
                (gap_m - gap_m0).abs() < 1e-6,
                "marginal shape off at sigma = {sigma}"
            );
        }
        // single-pair peaks: marginal peak right of profile peak by sqrt(2)
        let argmax = |v: &[f64]| {
            let mut k = 0;
            for i in 0..v.len() {
                if v[i] > v[k] {
                    k = i;
                }
            }
            curves.s[k]
        };
        let peak_p = argmax(&curves.log_profile);
        let peak_m = argmax(&curves.log_marginal);
        let step = curves.s[1] - curves.s[0];
        assert!((peak_p - d.abs() / 2.0).abs() <= step);
        assert!((peak_m - d.abs() / 2.0f64.sqrt()).abs() <= step);
        assert!(peak_m > peak_p);
    }

    #[test]
    fn path_gap_reports_the_node() {
        let model = TwoParamModel::with_flat_prior(
            |s, _b| {
                if s > 0.5 {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            },
            (0.0, 1.0),
            (0.0, 1.0),
            "s",
            "b",
        )
        .unwrap();
        let axis = model.s_axis(11).unwrap();
        let err = conditional_mle_path(&model, &axis).unwrap_err();
        match err {
            Error::PathGap { index, s, .. } => {
                assert!(s > 0.5);
                assert!(index >= 6);
            }
            other => panic!("expected PathGap, got {other:?}"),
        }
    }

    #[test]
    fn flat_slice_is_a_curvature_error() {
        let model = TwoParamModel::with_flat_prior(
            |s, _b| -(s * s),
            (-1.0, 1.0),
            (0.0, 1.0),
            "s",
            "b",
        )
        .unwrap();
        let axis = model.s_axis(5).unwrap();
        let err = laplace_marginal_approx(&model, &axis).unwrap_err();
        assert!(matches!(err, Error::Curvature { .. }));
    }

    #[test]
    fn truncation_flagged_when_window_too_narrow() {
        // Nuisance Gaussian much wider than the window.
        let model = TwoParamModel::with_flat_prior(
            |s, b| normal_log_pdf(s, 0.0, 1.0).unwrap() + normal_log_pdf(b, 0.0, 5.0).unwrap(),
            (-1.0, 1.0),
            (-2.0, 2.0),
            "s",
            "b",
        )
        .unwrap();
        let axis = model.s_axis(5).unwrap();
        let curve = marginal_likelihood_fn(&model, &axis, 501).unwrap();
        assert_eq!(curve.truncated_nodes.len(), 5);
    }
}
