//! Brute-force Monte Carlo reference for multivariate t box probabilities.
//!
//! Deliberately simple and independent of the lattice engine: draws are
//! generated through an eigendecomposition factor (not the reordered
//! Cholesky), the radial part uses direct chi-square sampling (not inverse
//! transforms), and points are plain pseudo-random. Kept in the crate so the
//! test suites can cross-check the production estimator against it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, StandardNormal};

use super::CorrelationMatrix;

/// Estimate `P(lower <= T <= upper)` by plain Monte Carlo with `samples`
/// draws. Returns the estimate and its binomial standard error.
pub fn mc_rectangle_probability(
    lower: &[f64],
    upper: &[f64],
    r: &CorrelationMatrix,
    df: f64,
    samples: u64,
    seed: u64,
) -> (f64, f64) {
    let q = r.dim();
    assert_eq!(lower.len(), q);
    assert_eq!(upper.len(), q);

    // PSD-safe factor A with A A' = R via the symmetric eigendecomposition.
    let eigen = r.entries().clone().symmetric_eigen();
    let mut factor = vec![0.0f64; q * q];
    for i in 0..q {
        for j in 0..q {
            let scale = eigen.eigenvalues[j].max(0.0).sqrt();
            factor[i * q + j] = eigen.eigenvectors[(i, j)] * scale;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chi = if df.is_finite() {
        Some(ChiSquared::new(df).expect("valid df"))
    } else {
        None
    };

    let mut z = vec![0.0f64; q];
    let mut hits = 0u64;
    for _ in 0..samples {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let scale = match &chi {
            Some(chi) => {
                let w: f64 = rng.sample(*chi);
                (df / w).sqrt()
            }
            None => 1.0,
        };
        let mut inside = true;
        for i in 0..q {
            let mut x = 0.0;
            for j in 0..q {
                x += factor[i * q + j] * z[j];
            }
            let t = x * scale;
            if t < lower[i] || t > upper[i] {
                inside = false;
                break;
            }
        }
        if inside {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let se = (p * (1.0 - p) / samples as f64).sqrt();
    (p, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    #[test]
    fn univariate_oracle_matches_t_cdf() {
        let r = CorrelationMatrix::identity(1);
        let t = StudentsT::new(0.0, 1.0, 8.0).unwrap();
        let bound = 1.2;
        let (p, se) = mc_rectangle_probability(
            &[f64::NEG_INFINITY],
            &[bound],
            &r,
            8.0,
            400_000,
            5,
        );
        let exact = t.cdf(bound);
        assert!((p - exact).abs() <= 4.0 * se, "p = {p}, exact = {exact}");
    }

    #[test]
    fn oracle_is_seed_deterministic() {
        let r = CorrelationMatrix::identity(2);
        let a = mc_rectangle_probability(&[-1.0, -1.0], &[1.0, 1.0], &r, 5.0, 10_000, 42);
        let b = mc_rectangle_probability(&[-1.0, -1.0], &[1.0, 1.0], &r, 5.0, 10_000, 42);
        assert_eq!(a, b);
    }
}
