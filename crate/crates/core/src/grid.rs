//! Dense log-density grids: the engine realizing every marginalization
//! integral. Normalization, marginals, HPD regions, propagation, posterior
//! prediction, model evidences, Bayes factors, and model averaging all run
//! over the same carrier, [`LogDensityGrid`].

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{log_sum_exp_unchecked, RngStream};

/// Coordinate transform of an axis. Quadrature runs uniformly in the
/// transformed coordinate, with the Jacobian folded into node weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisTransform {
    Linear,
    Log,
}

/// One rectangular-lattice axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub transform: AxisTransform,
}

impl Axis {
    pub fn linear(name: impl Into<String>, lo: f64, hi: f64, n: usize) -> Result<Self> {
        let axis = Axis {
            name: name.into(),
            lo,
            hi,
            n,
            transform: AxisTransform::Linear,
        };
        axis.validate()?;
        Ok(axis)
    }

    pub fn log(name: impl Into<String>, lo: f64, hi: f64, n: usize) -> Result<Self> {
        let axis = Axis {
            name: name.into(),
            lo,
            hi,
            n,
            transform: AxisTransform::Log,
        };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::usage(format!(
                "axis {}: needs finite lo < hi, got [{}, {}]",
                self.name, self.lo, self.hi
            )));
        }
        if self.n < 3 {
            return Err(Error::usage(format!(
                "axis {}: needs at least 3 nodes, got {}",
                self.name, self.n
            )));
        }
        if self.transform == AxisTransform::Log && !(self.lo > 0.0) {
            return Err(Error::usage(format!(
                "axis {}: log transform requires lo > 0, got {}",
                self.name, self.lo
            )));
        }
        Ok(())
    }

    fn to_transformed(&self, x: f64) -> f64 {
        match self.transform {
            AxisTransform::Linear => x,
            AxisTransform::Log => x.ln(),
        }
    }

    fn from_transformed(&self, u: f64) -> f64 {
        match self.transform {
            AxisTransform::Linear => u,
            AxisTransform::Log => u.exp(),
        }
    }

    /// Node spacing in the transformed coordinate.
    pub fn step_transformed(&self) -> f64 {
        (self.to_transformed(self.hi) - self.to_transformed(self.lo)) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n - 1 {
            return self.hi;
        }
        let u = self.to_transformed(self.lo) + self.step_transformed() * i as f64;
        self.from_transformed(u)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// ln of the trapezoid quadrature weight at each node, Jacobian
    /// included for log axes.
    pub(crate) fn log_weights(&self) -> Vec<f64> {
        let lh = self.step_transformed().ln();
        let half = lh - std::f64::consts::LN_2;
        (0..self.n)
            .map(|i| {
                let lw = if i == 0 || i == self.n - 1 { half } else { lh };
                match self.transform {
                    AxisTransform::Linear => lw,
                    AxisTransform::Log => lw + self.node(i).ln(),
                }
            })
            .collect()
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for d in (0..dims.len().saturating_sub(1)).rev() {
        s[d] = s[d + 1] * dims[d + 1];
    }
    s
}

/// Log-density values over a rectangular lattice: the universal carrier
/// for likelihoods, priors, and posteriors. Values are stored row-major in
/// axis declaration order.
#[derive(Debug, Clone)]
pub struct LogDensityGrid {
    axes: Vec<Axis>,
    logv: Vec<f64>,
    normalized: bool,
}

impl LogDensityGrid {
    /// Evaluate `log_f` at every lattice node. The evaluator receives the
    /// physical coordinates in axis declaration order.
    pub fn fill<F: FnMut(&[f64]) -> f64>(axes: Vec<Axis>, mut log_f: F) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::usage("grid needs at least one axis"));
        }
        for a in &axes {
            a.validate()?;
        }
        let node_cache: Vec<Vec<f64>> = axes.iter().map(|a| a.nodes()).collect();
        let dims: Vec<usize> = axes.iter().map(|a| a.n).collect();
        let len: usize = dims.iter().product();
        let mut logv = Vec::with_capacity(len);
        let mut idx = vec![0usize; dims.len()];
        let mut point = vec![0.0f64; dims.len()];
        for _ in 0..len {
            for (d, &i) in idx.iter().enumerate() {
                point[d] = node_cache[d][i];
            }
            let v = log_f(&point);
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::numeric(format!(
                    "grid evaluator returned {v} at {point:?}"
                )));
            }
            logv.push(v);
            // mixed-radix increment
            for d in (0..dims.len()).rev() {
                idx[d] += 1;
                if idx[d] < dims[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(LogDensityGrid {
            axes,
            logv,
            normalized: false,
        })
    }

    pub fn from_log_values(axes: Vec<Axis>, logv: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::usage("grid needs at least one axis"));
        }
        for a in &axes {
            a.validate()?;
        }
        let len: usize = axes.iter().map(|a| a.n).product();
        if logv.len() != len {
            return Err(Error::usage(format!(
                "value array length {} does not match lattice size {len}",
                logv.len()
            )));
        }
        if let Some(bad) = logv.iter().find(|v| v.is_nan() || **v == f64::INFINITY) {
            return Err(Error::numeric(format!(
                "grid values must be finite or -inf, found {bad}"
            )));
        }
        Ok(LogDensityGrid {
            axes,
            logv,
            normalized: false,
        })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.logv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logv.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.logv
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn axis_position(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    /// ln of the total node weight (product over axes) at a flat index.
    fn per_axis_log_weights(&self) -> Vec<Vec<f64>> {
        self.axes.iter().map(|a| a.log_weights()).collect()
    }

    /// ln ∫ exp(logv) over all axes by trapezoid quadrature.
    pub fn log_integral(&self) -> f64 {
        let dims = self.dims();
        let strides = strides(&dims);
        let weights = self.per_axis_log_weights();
        log_sum_exp_unchecked((0..self.logv.len()).map(move |flat| {
            let mut t = self.logv[flat];
            for d in 0..dims.len() {
                let i = (flat / strides[d]) % dims[d];
                t += weights[d][i];
            }
            t
        }))
    }

    /// Normalize so the grid integrates to one; returns the normalized grid
    /// and `ln` of the evidence (the prior-predictive integral).
    pub fn normalize(&self) -> Result<(LogDensityGrid, f64)> {
        let log_z = self.log_integral();
        if log_z == f64::NEG_INFINITY {
            return Err(Error::DegenerateEvidence(
                "grid carries zero mass everywhere".into(),
            ));
        }
        let logv = self.logv.iter().map(|v| v - log_z).collect();
        Ok((
            LogDensityGrid {
                axes: self.axes.clone(),
                logv,
                normalized: true,
            },
            log_z,
        ))
    }

    /// Integrate out the named axes, leaving a grid over the others.
    pub fn marginalize(&self, drop_axes: &[&str]) -> Result<LogDensityGrid> {
        if drop_axes.is_empty() {
            return Err(Error::usage("marginalize: no axes named"));
        }
        let mut drop = vec![false; self.axes.len()];
        for name in drop_axes {
            let d = self
                .axis_position(name)
                .ok_or_else(|| Error::usage(format!("marginalize: no axis named {name}")))?;
            drop[d] = true;
        }
        if drop.iter().all(|&d| d) {
            return Err(Error::usage(
                "marginalize would drop every axis; use normalize/log_integral instead",
            ));
        }

        let dims = self.dims();
        let in_strides = strides(&dims);
        let weights = self.per_axis_log_weights();

        let kept: Vec<usize> = (0..self.axes.len()).filter(|&d| !drop[d]).collect();
        let kept_dims: Vec<usize> = kept.iter().map(|&d| dims[d]).collect();
        let kept_strides = strides(&kept_dims);
        let out_len: usize = kept_dims.iter().product();

        // Two-pass streaming log-sum-exp per kept node.
        let mut max = vec![f64::NEG_INFINITY; out_len];
        let mut term = vec![0.0f64; self.logv.len()];
        let mut out_of = vec![0usize; self.logv.len()];
        for flat in 0..self.logv.len() {
            let mut t = self.logv[flat];
            let mut ko = 0usize;
            for (pos, &d) in kept.iter().enumerate() {
                let i = (flat / in_strides[d]) % dims[d];
                ko += i * kept_strides[pos];
            }
            for d in 0..dims.len() {
                if drop[d] {
                    let i = (flat / in_strides[d]) % dims[d];
                    t += weights[d][i];
                }
            }
            term[flat] = t;
            out_of[flat] = ko;
            if t > max[ko] {
                max[ko] = t;
            }
        }
        let mut acc = vec![0.0f64; out_len];
        for flat in 0..self.logv.len() {
            let ko = out_of[flat];
            if max[ko] > f64::NEG_INFINITY && term[flat] > f64::NEG_INFINITY {
                acc[ko] += (term[flat] - max[ko]).exp();
            }
        }
        let logv: Vec<f64> = max
            .iter()
            .zip(&acc)
            .map(|(&m, &a)| {
                if m == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    m + a.ln()
                }
            })
            .collect();

        Ok(LogDensityGrid {
            axes: kept.iter().map(|&d| self.axes[d].clone()).collect(),
            logv,
            normalized: self.normalized,
        })
    }

    fn require_1d_normalized(&self, op: &str) -> Result<()> {
        if self.ndim() != 1 {
            return Err(Error::usage(format!("{op} needs a 1-D grid")));
        }
        if !self.normalized {
            return Err(Error::usage(format!("{op} needs a normalized grid")));
        }
        Ok(())
    }

    /// Highest-posterior-density region of a normalized 1-D grid, as a union
    /// of closed intervals found by a density-threshold bisection sweep.
    pub fn hpd_region(&self, level: f64) -> Result<Vec<(f64, f64)>> {
        self.require_1d_normalized("hpd_region")?;
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::usage(format!("HPD level must be in (0, 1), got {level}")));
        }
        let weights = self.axes[0].log_weights();
        let mass: Vec<f64> = self
            .logv
            .iter()
            .zip(&weights)
            .map(|(v, w)| (v + w).exp())
            .collect();

        let mass_above = |threshold: f64| -> f64 {
            self.logv
                .iter()
                .zip(&mass)
                .filter(|(v, _)| **v >= threshold)
                .map(|(_, m)| m)
                .sum()
        };

        let mut lo_t = f64::INFINITY;
        let mut hi_t = f64::NEG_INFINITY;
        for &v in &self.logv {
            if v > hi_t {
                hi_t = v;
            }
            if v < lo_t {
                lo_t = v;
            }
        }
        if lo_t == f64::NEG_INFINITY {
            lo_t = hi_t - 745.0; // below exp underflow; nodes there carry no mass
        }
        // Find the highest threshold whose super-level set still holds the
        // requested mass (ties at the threshold included).
        let mut lo = lo_t;
        let mut hi = hi_t;
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if mass_above(mid) >= level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let threshold = lo;

        let mut intervals = Vec::new();
        let mut run_start: Option<usize> = None;
        for i in 0..self.logv.len() {
            let inside = self.logv[i] >= threshold;
            match (inside, run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(s)) => {
                    intervals.push((self.axes[0].node(s), self.axes[0].node(i - 1)));
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = run_start {
            intervals.push((self.axes[0].node(s), self.axes[0].node(self.logv.len() - 1)));
        }
        Ok(intervals)
    }

    /// Posterior summary of a normalized 1-D grid.
    pub fn summarize(&self, levels: &[f64], log_evidence: f64) -> Result<InferenceSummary> {
        self.require_1d_normalized("summarize")?;
        let nodes = self.axes[0].nodes();
        let weights = self.axes[0].log_weights();
        let mut mode_x = nodes[0];
        let mut mode_v = f64::NEG_INFINITY;
        let mut mean = 0.0;
        for i in 0..nodes.len() {
            if self.logv[i] > mode_v {
                mode_v = self.logv[i];
                mode_x = nodes[i];
            }
            mean += nodes[i] * (self.logv[i] + weights[i]).exp();
        }
        let mut hpd_intervals = Vec::with_capacity(levels.len());
        for &level in levels {
            hpd_intervals.push(HpdInterval {
                level,
                intervals: self.hpd_region(level)?,
            });
        }
        Ok(InferenceSummary {
            mode: mode_x,
            mean,
            hpd_intervals,
            log_evidence,
        })
    }

    /// Mode of the density (coordinates of the largest log value).
    pub fn mode(&self) -> (Vec<f64>, f64) {
        let dims = self.dims();
        let st = strides(&dims);
        let mut best = 0usize;
        for i in 1..self.logv.len() {
            if self.logv[i] > self.logv[best] {
                best = i;
            }
        }
        let point: Vec<f64> = (0..dims.len())
            .map(|d| self.axes[d].node((best / st[d]) % dims[d]))
            .collect();
        (point, self.logv[best])
    }

    /// Per-axis posterior means of a normalized grid.
    pub fn means(&self) -> Result<Vec<f64>> {
        if !self.normalized {
            return Err(Error::usage("means needs a normalized grid"));
        }
        let dims = self.dims();
        let st = strides(&dims);
        let weights = self.per_axis_log_weights();
        let mut means = vec![0.0f64; dims.len()];
        for flat in 0..self.logv.len() {
            let mut t = self.logv[flat];
            for d in 0..dims.len() {
                t += weights[d][(flat / st[d]) % dims[d]];
            }
            let m = t.exp();
            for d in 0..dims.len() {
                means[d] += m * self.axes[d].node((flat / st[d]) % dims[d]);
            }
        }
        Ok(means)
    }

    /// Draw `m` posterior samples of `f(θ)` by grid-weighted categorical
    /// sampling with within-cell jitter, and histogram the results.
    pub fn propagate<F: Fn(&[f64]) -> f64>(
        &self,
        f: F,
        rng: &mut RngStream,
        m: usize,
    ) -> Result<Propagated> {
        if !self.normalized {
            return Err(Error::usage("propagate needs a normalized grid"));
        }
        if m < 10_000 {
            return Err(Error::usage(format!(
                "propagate needs at least 10^4 samples, got {m}"
            )));
        }
        let dims = self.dims();
        let st = strides(&dims);
        let weights = self.per_axis_log_weights();

        // Cumulative node masses for categorical sampling.
        let mut cum = Vec::with_capacity(self.logv.len());
        let mut total = 0.0f64;
        for flat in 0..self.logv.len() {
            let mut t = self.logv[flat];
            for d in 0..dims.len() {
                t += weights[d][(flat / st[d]) % dims[d]];
            }
            total += t.exp();
            cum.push(total);
        }
        if total <= 0.0 {
            return Err(Error::DegenerateEvidence("no mass to sample".into()));
        }

        let mut draws = Vec::with_capacity(m);
        let mut point = vec![0.0f64; dims.len()];
        for _ in 0..m {
            let u = rng.uniform() * total;
            let flat = cum.partition_point(|&c| c < u).min(self.logv.len() - 1);
            for d in 0..dims.len() {
                let i = (flat / st[d]) % dims[d];
                let axis = &self.axes[d];
                let h = axis.step_transformed();
                let center = axis.to_transformed(axis.node(i));
                let lo_u = if i == 0 { center } else { center - h / 2.0 };
                let hi_u = if i == dims[d] - 1 { center } else { center + h / 2.0 };
                point[d] = axis.from_transformed(rng.uniform_in(lo_u, hi_u));
            }
            let v = f(&point);
            if !v.is_finite() {
                return Err(Error::numeric(format!(
                    "propagated function returned {v} at {point:?}"
                )));
            }
            draws.push(v);
        }
        let histogram = Histogram::from_draws(&draws);
        Ok(Propagated { draws, histogram })
    }

    /// Posterior predictive mass for each datum in `support`:
    /// `p(D') = ∫ dθ p(D'|θ) p(θ|D)` by grid quadrature.
    pub fn posterior_predictive<D: Copy, F: Fn(D, &[f64]) -> f64>(
        &self,
        sampling_log_mass: F,
        support: &[D],
    ) -> Result<Predictive<D>> {
        if !self.normalized {
            return Err(Error::usage("posterior_predictive needs a normalized grid"));
        }
        if support.is_empty() {
            return Err(Error::usage("posterior_predictive needs a nonempty support"));
        }
        let dims = self.dims();
        let st = strides(&dims);
        let weights = self.per_axis_log_weights();
        let node_cache: Vec<Vec<f64>> = self.axes.iter().map(|a| a.nodes()).collect();

        let mut log_mass = Vec::with_capacity(support.len());
        let mut point = vec![0.0f64; dims.len()];
        let mut terms = vec![0.0f64; self.logv.len()];
        for &d_new in support {
            for flat in 0..self.logv.len() {
                let mut t = self.logv[flat];
                for d in 0..dims.len() {
                    let i = (flat / st[d]) % dims[d];
                    t += weights[d][i];
                    point[d] = node_cache[d][i];
                }
                let lp = sampling_log_mass(d_new, &point);
                if lp.is_nan() || lp == f64::INFINITY {
                    return Err(Error::numeric(format!(
                        "sampling log-mass returned {lp} at {point:?}"
                    )));
                }
                terms[flat] = t + lp;
            }
            log_mass.push(log_sum_exp_unchecked(terms.iter().copied()));
        }
        let coverage: f64 = log_mass.iter().map(|lm| lm.exp()).sum();
        Ok(Predictive {
            support: support.to_vec(),
            log_mass,
            coverage,
            truncated: coverage < 1.0 - 1e-9,
        })
    }

    /// CSV serialization: one row per node, axis coordinates then
    /// log-density, 17 significant digits.
    pub fn to_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let names: Vec<&str> = self.axes.iter().map(|a| a.name.as_str()).collect();
        writeln!(w, "{},log_density", names.join(","))?;
        let dims = self.dims();
        let st = strides(&dims);
        let node_cache: Vec<Vec<f64>> = self.axes.iter().map(|a| a.nodes()).collect();
        for flat in 0..self.logv.len() {
            for d in 0..dims.len() {
                write!(w, "{:.16e},", node_cache[d][(flat / st[d]) % dims[d]])?;
            }
            writeln!(w, "{:.16e}", self.logv[flat])?;
        }
        Ok(())
    }

    /// JSON serialization: axes metadata plus the flat value array,
    /// row-major in axis declaration order. −∞ entries encode as null.
    pub fn to_json(&self) -> serde_json::Value {
        let logv: Vec<serde_json::Value> = self
            .logv
            .iter()
            .map(|&v| {
                if v == f64::NEG_INFINITY {
                    serde_json::Value::Null
                } else {
                    serde_json::json!(v)
                }
            })
            .collect();
        serde_json::json!({
            "axes": self.axes,
            "normalized": self.normalized,
            "logv": logv,
        })
    }
}

/// One HPD credible set: a level and the closed intervals realizing it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HpdInterval {
    pub level: f64,
    pub intervals: Vec<(f64, f64)>,
}

/// Mode, mean, HPD intervals, and log-evidence of a 1-D posterior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InferenceSummary {
    pub mode: f64,
    pub mean: f64,
    pub hpd_intervals: Vec<HpdInterval>,
    pub log_evidence: f64,
}

/// Histogram density estimate over equal-width bins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn from_draws(draws: &[f64]) -> Histogram {
        let n_bins = ((draws.len() as f64).sqrt().round() as usize).clamp(20, 200);
        let lo = draws.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = draws.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let h = span / n_bins as f64;
        let mut counts = vec![0usize; n_bins];
        for &d in draws {
            let b = (((d - lo) / h) as usize).min(n_bins - 1);
            counts[b] += 1;
        }
        let norm = draws.len() as f64 * h;
        Histogram {
            edges: (0..=n_bins).map(|i| lo + h * i as f64).collect(),
            density: counts.iter().map(|&c| c as f64 / norm).collect(),
        }
    }
}

/// Posterior samples of a propagated quantity plus their histogram.
#[derive(Debug, Clone)]
pub struct Propagated {
    pub draws: Vec<f64>,
    pub histogram: Histogram,
}

impl Propagated {
    pub fn mean(&self) -> f64 {
        self.draws.iter().sum::<f64>() / self.draws.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (self.draws.len() as f64 - 1.0)
    }
}

/// Posterior predictive mass over a finite support window.
#[derive(Debug, Clone)]
pub struct Predictive<D> {
    pub support: Vec<D>,
    pub log_mass: Vec<f64>,
    /// Total predictive mass captured by the window.
    pub coverage: f64,
    /// True when the window captured less than 1 - 1e-9 of the mass.
    pub truncated: bool,
}

/// One model entering an evidence comparison: either a prior grid paired
/// with a likelihood evaluator, or a point hypothesis with no free
/// parameters (whose evidence is its likelihood value).
pub enum ModelSpec<'a> {
    Gridded {
        prior: &'a LogDensityGrid,
        log_like: &'a dyn Fn(&[f64]) -> f64,
    },
    Point {
        log_like: f64,
    },
}

impl ModelSpec<'_> {
    pub fn log_evidence(&self) -> Result<f64> {
        match self {
            ModelSpec::Point { log_like } => Ok(*log_like),
            ModelSpec::Gridded { prior, log_like } => {
                let joint = prior_times_likelihood(prior, log_like)?;
                Ok(joint.log_integral())
            }
        }
    }
}

/// Multiply a prior grid by a likelihood evaluator node-by-node.
pub fn prior_times_likelihood(
    prior: &LogDensityGrid,
    log_like: &dyn Fn(&[f64]) -> f64,
) -> Result<LogDensityGrid> {
    let axes = prior.axes().to_vec();
    let prior_vals = prior.values();
    let mut flat = 0usize;
    let grid = LogDensityGrid::fill(axes, |point| {
        let v = prior_vals[flat] + log_like(point);
        flat += 1;
        v
    })?;
    Ok(grid)
}

/// Per-model log evidences and the pairwise Bayes factor matrix
/// `B[i][j] = exp(logE_i - logE_j)`.
#[derive(Debug, Clone, Serialize)]
pub struct EvidenceReport {
    pub log_evidences: Vec<f64>,
    pub bayes_factors: Vec<Vec<f64>>,
}

pub fn evidence_and_bayes_factors(models: &[ModelSpec]) -> Result<EvidenceReport> {
    if models.len() < 2 {
        return Err(Error::usage("model comparison needs at least 2 models"));
    }
    let log_evidences: Vec<f64> = models
        .iter()
        .map(|m| m.log_evidence())
        .collect::<Result<_>>()?;
    if let Some(bad) = log_evidences.iter().find(|e| **e == f64::NEG_INFINITY) {
        return Err(Error::DegenerateEvidence(format!(
            "a model carries zero evidence (log evidence {bad})"
        )));
    }
    let bayes_factors = log_evidences
        .iter()
        .map(|ei| log_evidences.iter().map(|ej| (ei - ej).exp()).collect())
        .collect();
    Ok(EvidenceReport {
        log_evidences,
        bayes_factors,
    })
}

/// Evidence-weighted mixture of per-model marginal posteriors on a shared
/// axis. `posteriors` pairs each model's normalized posterior grid with its
/// log evidence; `prior_model_weights` overrides the default equal prior
/// model probabilities. Returns the normalized averaged density and the
/// posterior model weights.
pub fn model_average(
    posteriors: &[(LogDensityGrid, f64)],
    shared_axis: &str,
    prior_model_weights: Option<&[f64]>,
) -> Result<(LogDensityGrid, Vec<f64>)> {
    if posteriors.is_empty() {
        return Err(Error::usage("model_average needs at least one model"));
    }
    if let Some(w) = prior_model_weights {
        if w.len() != posteriors.len() {
            return Err(Error::usage("one prior weight per model required"));
        }
        if w.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::usage("prior model weights must be positive"));
        }
    }

    // Marginalize every posterior onto the shared axis.
    let mut marginals = Vec::with_capacity(posteriors.len());
    for (grid, _) in posteriors {
        if grid.axis_position(shared_axis).is_none() {
            return Err(Error::usage(format!(
                "model lacks the shared axis {shared_axis}"
            )));
        }
        let others: Vec<&str> = grid
            .axes()
            .iter()
            .filter(|a| a.name != shared_axis)
            .map(|a| a.name.as_str())
            .collect();
        let marg = if others.is_empty() {
            grid.clone()
        } else {
            grid.marginalize(&others)?
        };
        marginals.push(marg);
    }
    let reference = marginals[0].axes()[0].clone();
    for m in &marginals[1..] {
        if m.axes()[0] != reference {
            return Err(Error::usage(
                "shared axis must be identical across models (range, nodes, transform)",
            ));
        }
    }

    // Posterior model weights: prior weight times evidence, normalized.
    let log_prior_w: Vec<f64> = match prior_model_weights {
        Some(w) => w.iter().map(|x| x.ln()).collect(),
        None => vec![0.0; posteriors.len()],
    };
    let log_w_raw: Vec<f64> = posteriors
        .iter()
        .zip(&log_prior_w)
        .map(|((_, log_e), lpw)| log_e + lpw)
        .collect();
    let log_w_total = crate::kernel::log_sum_exp(&log_w_raw)?;
    let log_w: Vec<f64> = log_w_raw.iter().map(|lw| lw - log_w_total).collect();

    let n = reference.n;
    let mut logv = vec![f64::NEG_INFINITY; n];
    for i in 0..n {
        let terms: Vec<f64> = marginals
            .iter()
            .zip(&log_w)
            .map(|(m, lw)| m.values()[i] + lw)
            .collect();
        logv[i] = log_sum_exp_unchecked(terms.into_iter());
    }
    let mixed = LogDensityGrid::from_log_values(vec![reference], logv)?;
    let (normalized, _) = mixed.normalize()?;
    Ok((normalized, log_w.iter().map(|lw| lw.exp()).collect()))
}
