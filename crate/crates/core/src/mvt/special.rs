//! Scalar special functions used in the integration hot loop.
//!
//! Thin wrappers over `statrs` primitives, shaped so the sequential sampler
//! never constructs distribution objects per point.

use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_lr, ln_gamma};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal CDF.
#[inline]
pub fn phi(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn phi_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile.
#[inline]
pub fn phi_inv(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// Chi-square quantile via a Wilson-Hilferty start refined by safeguarded
/// Newton steps on the regularized incomplete gamma.
pub fn chi2_quantile(p: f64, df: f64) -> f64 {
    debug_assert!(df > 0.0);
    let p = p.clamp(1e-300, 1.0 - 1e-16);
    let half_df = df / 2.0;

    // Wilson-Hilferty: chi2 ~ df * (1 - 2/(9 df) + z sqrt(2/(9 df)))^3
    let z = phi_inv(p);
    let a = 2.0 / (9.0 * df);
    let mut x = df * (1.0 - a + z * a.sqrt()).powi(3);
    if !(x > 0.0) || !x.is_finite() {
        x = df;
    }

    let ln_norm = -half_df * std::f64::consts::LN_2 - ln_gamma(half_df);
    let mut lo = 0.0f64;
    let mut hi = f64::INFINITY;
    for _ in 0..64 {
        let f = gamma_lr(half_df, x / 2.0) - p;
        if f >= 0.0 {
            hi = hi.min(x);
        } else {
            lo = lo.max(x);
        }
        let ln_pdf = (half_df - 1.0) * x.ln() - x / 2.0 + ln_norm;
        let pdf = ln_pdf.exp();
        let mut next = if pdf > 0.0 { x - f / pdf } else { x };
        if !(next > lo) || !(next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { x * 2.0 };
        }
        if (next - x).abs() <= 1e-13 * x.max(1e-100) {
            return next;
        }
        x = next;
    }
    x
}
