//! Derivative-free 1-D maximization: coarse scan plus golden-section
//! refinement, robust for likelihood slices supplied as black boxes.

use crate::error::{Error, Result};

const SCAN_POINTS: usize = 33;
const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Maximize `f` on `[lo, hi]` to within `tol` of a local maximizer
/// (the global one when `f` is unimodal). Returns `(argmax, max)`.
///
/// `f` may return −∞ inside excluded regions; those points simply never win.
/// NaN or +∞ anywhere, or a slice that is −∞ everywhere, is an error
/// reporting the offending abscissa. A perfectly flat scan is resolved to
/// the interval midpoint.
pub fn maximize_1d<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::usage(format!(
            "maximize_1d needs finite lo < hi, got [{lo}, {hi}]"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::usage(format!("maximize_1d needs tol > 0, got {tol}")));
    }

    let mut eval = |x: f64, f: &mut F| -> Result<f64> {
        let v = f(x);
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::numeric(format!(
                "objective returned {v} at x = {x}"
            )));
        }
        Ok(v)
    };

    let h = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    let mut min_v = f64::INFINITY;
    let mut scan = [0.0f64; SCAN_POINTS];
    for (i, slot) in scan.iter_mut().enumerate() {
        let x = if i == SCAN_POINTS - 1 { hi } else { lo + h * i as f64 };
        let v = eval(x, &mut f)?;
        *slot = v;
        if v > best_v {
            best_v = v;
            best_i = i;
        }
        if v < min_v {
            min_v = v;
        }
    }
    if best_v == f64::NEG_INFINITY {
        return Err(Error::numeric(format!(
            "objective is -inf everywhere on [{lo}, {hi}]"
        )));
    }
    if best_v == min_v {
        // Plateau tie-break: midpoint.
        let mid = 0.5 * (lo + hi);
        return Ok((mid, eval(mid, &mut f)?));
    }

    // Bracket around the scan winner.
    let mut a = if best_i == 0 { lo } else { lo + h * (best_i - 1) as f64 };
    let mut b = if best_i >= SCAN_POINTS - 2 {
        hi
    } else {
        lo + h * (best_i + 1) as f64
    };

    // Golden-section refinement.
    let mut x1 = b - INV_GOLDEN * (b - a);
    let mut x2 = a + INV_GOLDEN * (b - a);
    let mut f1 = eval(x1, &mut f)?;
    let mut f2 = eval(x2, &mut f)?;
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_GOLDEN * (b - a);
            f2 = eval(x2, &mut f)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_GOLDEN * (b - a);
            f1 = eval(x1, &mut f)?;
        }
    }
    let xm = 0.5 * (a + b);
    let fm = eval(xm, &mut f)?;
    // Guard against refinement landing below an interior probe.
    if f1 >= fm && f1 >= f2 {
        Ok((x1, f1))
    } else if f2 >= fm {
        Ok((x2, f2))
    } else {
        Ok((xm, fm))
    }
}
