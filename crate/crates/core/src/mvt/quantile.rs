//! Equicoordinate critical values of the multivariate t distribution.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::qmc::mvt_rectangle_probability;
use super::{CorrelationMatrix, QmcConfig};
use crate::error::{Error, Result};

/// Which box the critical value bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// `[-t, t]^q`, for two-sided alternatives.
    TwoSidedBox,
    /// `(-inf, t]^q`, for "greater" alternatives and lower confidence limits.
    LowerOneSided,
    /// `[-t, inf)^q`, for "less" alternatives and upper confidence limits.
    UpperOneSided,
}

/// Result of the critical-value search.
#[derive(Debug, Clone, Copy)]
pub struct QuantileResult {
    /// The equicoordinate critical value t*.
    pub value: f64,
    /// Box probability re-evaluated at t* (target is 1 - alpha).
    pub achieved_probability: f64,
    /// Standard error of that final probability evaluation.
    pub std_error: f64,
    /// Width of the final root bracket in t units.
    pub bracket_width: f64,
    pub iterations: u32,
}

/// Probability residual below which the root search stops.
pub const QUANTILE_PROB_TOL: f64 = 1e-3;

/// Smallest t* such that the box probability reaches `1 - alpha`.
///
/// The probability is monotone in t and every evaluation reuses the same
/// seed (common random numbers), so the estimated curve itself is monotone
/// and plain bracketing with secant steps converges despite the QMC noise.
pub fn equicoordinate_quantile(
    alpha: f64,
    r: &CorrelationMatrix,
    df: f64,
    tail: Tail,
    cfg: &QmcConfig,
) -> Result<QuantileResult> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidConfig(format!(
            "alpha {alpha} outside (0, 0.5]"
        )));
    }
    if !(df >= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "degrees of freedom {df} must be >= 1 (or infinite)"
        )));
    }
    let q = r.dim();
    let target = 1.0 - alpha;

    // Univariate quantile is a lower bound for t*; the Bonferroni quantile
    // is an upper bound.
    let marginal_tail = match tail {
        Tail::TwoSidedBox => alpha / 2.0,
        _ => alpha,
    };
    let mut lo = univariate_upper_quantile(marginal_tail, df);
    let mut hi = univariate_upper_quantile(marginal_tail / q as f64, df);
    if q == 1 {
        hi = lo + lo.abs().max(0.5);
    }

    let eval = |t: f64| -> Result<(f64, f64)> {
        let (lower, upper) = bounds_for(tail, t, q);
        let p = mvt_rectangle_probability(&lower, &upper, r, df, cfg)?;
        Ok((p.value, p.std_error))
    };

    let (mut p_lo, mut err) = eval(lo)?;
    if (p_lo - target).abs() <= QUANTILE_PROB_TOL {
        return Ok(QuantileResult {
            value: lo,
            achieved_probability: p_lo,
            std_error: err,
            bracket_width: 0.0,
            iterations: 1,
        });
    }
    let (mut p_hi, mut iterations) = {
        let (p, e) = eval(hi)?;
        err = e;
        (p, 2u32)
    };
    // Expand brackets if the QMC estimate disagrees with the analytic bounds.
    let mut guard = 0;
    while p_lo > target && guard < 10 {
        lo -= (hi - lo).max(0.1);
        let (p, _) = eval(lo)?;
        p_lo = p;
        iterations += 1;
        guard += 1;
    }
    guard = 0;
    while p_hi < target && guard < 10 {
        hi += (hi - lo).max(0.1);
        let (p, _) = eval(hi)?;
        p_hi = p;
        iterations += 1;
        guard += 1;
    }
    if p_lo > target || p_hi < target {
        return Err(Error::NonConvergence(format!(
            "could not bracket the quantile: p({lo}) = {p_lo}, p({hi}) = {p_hi}"
        )));
    }

    let mut best = QuantileResult {
        value: hi,
        achieved_probability: p_hi,
        std_error: err,
        bracket_width: hi - lo,
        iterations,
    };
    for _ in 0..80 {
        let width = hi - lo;
        // Secant step clamped away from the bracket edges; fall back to
        // bisection when the interpolation is degenerate.
        let mut t = if p_hi > p_lo {
            lo + (target - p_lo) / (p_hi - p_lo) * width
        } else {
            lo + 0.5 * width
        };
        let margin = 0.05 * width;
        t = t.clamp(lo + margin, hi - margin);
        let (p, e) = eval(t)?;
        iterations += 1;
        best = QuantileResult {
            value: t,
            achieved_probability: p,
            std_error: e,
            bracket_width: width,
            iterations,
        };
        if (p - target).abs() <= QUANTILE_PROB_TOL || width <= 1e-6 {
            return Ok(best);
        }
        if p < target {
            lo = t;
            p_lo = p;
        } else {
            hi = t;
            p_hi = p;
        }
    }
    // The bracket kept shrinking without hitting the tolerance; treat a tiny
    // bracket as converged, otherwise report failure.
    if best.bracket_width <= 1e-4 {
        Ok(best)
    } else {
        Err(Error::NonConvergence(format!(
            "quantile search stalled at bracket [{lo}, {hi}] after {iterations} evaluations"
        )))
    }
}

fn bounds_for(tail: Tail, t: f64, q: usize) -> (Vec<f64>, Vec<f64>) {
    match tail {
        Tail::TwoSidedBox => (vec![-t; q], vec![t; q]),
        Tail::LowerOneSided => (vec![f64::NEG_INFINITY; q], vec![t; q]),
        Tail::UpperOneSided => (vec![-t; q], vec![f64::INFINITY; q]),
    }
}

/// Univariate t (or normal, for infinite df) upper-tail quantile.
pub fn univariate_upper_quantile(tail_mass: f64, df: f64) -> f64 {
    if df.is_finite() {
        StudentsT::new(0.0, 1.0, df)
            .expect("valid df")
            .inverse_cdf(1.0 - tail_mass)
    } else {
        Normal::new(0.0, 1.0).unwrap().inverse_cdf(1.0 - tail_mass)
    }
}
