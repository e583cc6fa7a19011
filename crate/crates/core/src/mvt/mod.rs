//! Central multivariate t probabilities over hyper-rectangles.
//!
//! The estimator follows the Genz-Bretz separation-of-variables scheme: a
//! Cholesky factor of the correlation matrix with variance-reducing variable
//! reordering, a sequential conditional transform of the box, a chi-based
//! radial variable for finite degrees of freedom, and randomized Richtmyer
//! lattice points. Results are deterministic for a fixed seed and carry a
//! standard error estimated across the random shifts.
//!
//! [`oracle`] holds an independent plain Monte Carlo reference used by the
//! test suites; it shares no code with the lattice engine.

mod qmc;
pub(crate) mod quantile;
pub mod oracle;
pub(crate) mod special;

pub use qmc::{mvt_rectangle_probability, MvtProbability};
pub use quantile::{equicoordinate_quantile, QuantileResult, Tail, QUANTILE_PROB_TOL};

use nalgebra::DMatrix;

use crate::contrasts::ContrastMatrix;
use crate::covariance::CovarianceEstimate;
use crate::error::{Error, Result};

/// Eigenvalues above this (negative) floor are treated as numerical noise
/// and clipped to zero; anything below is a genuinely indefinite input.
pub const PSD_CLIP_TOL: f64 = 1e-8;

/// A validated correlation matrix: symmetric, unit diagonal, entries in
/// [-1, 1], positive semidefinite after clipping eigenvalues above
/// -[`PSD_CLIP_TOL`] to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    entries: DMatrix<f64>,
}

impl CorrelationMatrix {
    /// Validate (and, for eigenvalues in `(-PSD_CLIP_TOL, 0)`, repair) a
    /// candidate correlation matrix.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::InvalidConfig(format!(
                "correlation matrix must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let q = entries.nrows();
        for i in 0..q {
            if (entries[(i, i)] - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidConfig(format!(
                    "diagonal entry ({i},{i}) = {} is not 1",
                    entries[(i, i)]
                )));
            }
            for j in 0..i {
                if (entries[(i, j)] - entries[(j, i)]).abs() > 1e-10 {
                    return Err(Error::InvalidConfig(format!(
                        "asymmetric entries at ({i},{j})"
                    )));
                }
                if entries[(i, j)].abs() > 1.0 + 1e-10 {
                    return Err(Error::InvalidConfig(format!(
                        "entry ({i},{j}) = {} outside [-1, 1]",
                        entries[(i, j)]
                    )));
                }
            }
        }
        // Symmetrize and clamp before the eigenvalue check.
        let mut m = DMatrix::zeros(q, q);
        for i in 0..q {
            m[(i, i)] = 1.0;
            for j in 0..i {
                let v = (0.5 * (entries[(i, j)] + entries[(j, i)])).clamp(-1.0, 1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let eigen = m.clone().symmetric_eigen();
        let min_eig = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_CLIP_TOL {
            return Err(Error::NonPsd(format!(
                "smallest eigenvalue {min_eig} below clipping tolerance -{PSD_CLIP_TOL}"
            )));
        }
        if min_eig < 0.0 {
            // Clip the noise eigenvalues to zero and renormalize the diagonal.
            let mut vals = eigen.eigenvalues.clone();
            for v in vals.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let repaired = &eigen.eigenvectors
                * DMatrix::from_diagonal(&vals)
                * eigen.eigenvectors.transpose();
            let d: Vec<f64> = (0..q).map(|i| repaired[(i, i)].max(1e-300).sqrt()).collect();
            for i in 0..q {
                m[(i, i)] = 1.0;
                for j in 0..i {
                    let v = (repaired[(i, j)] / (d[i] * d[j])).clamp(-1.0, 1.0);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
        }
        Ok(CorrelationMatrix { entries: m })
    }

    /// The q-by-q identity.
    pub fn identity(q: usize) -> Self {
        CorrelationMatrix {
            entries: DMatrix::identity(q, q),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }
}

/// Configuration of the randomized quasi-Monte Carlo estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct QmcConfig {
    /// Maximum lattice points per random shift (hard cap 1e7).
    pub sample_budget: u64,
    /// Number of independent random shifts the standard error is estimated
    /// across.
    pub randomizations: u32,
    /// Seed for the shift substreams.
    pub seed: u64,
    /// Target absolute standard error; sampling stops early once reached.
    pub target_abs_error: f64,
}

impl Default for QmcConfig {
    fn default() -> Self {
        QmcConfig {
            sample_budget: 100_000,
            randomizations: 12,
            seed: 0,
            target_abs_error: 1e-4,
        }
    }
}

impl QmcConfig {
    pub fn validated(self) -> Result<Self> {
        if self.sample_budget < 1000 {
            return Err(Error::InvalidConfig(format!(
                "sample_budget {} below minimum 1000",
                self.sample_budget
            )));
        }
        if self.sample_budget > 10_000_000 {
            return Err(Error::InvalidConfig(format!(
                "sample_budget {} above hard cap 1e7",
                self.sample_budget
            )));
        }
        if self.randomizations < 8 {
            return Err(Error::InvalidConfig(format!(
                "randomizations {} below minimum 8",
                self.randomizations
            )));
        }
        if !(self.target_abs_error > 0.0 && self.target_abs_error <= 0.01) {
            return Err(Error::InvalidConfig(format!(
                "target_abs_error {} outside (0, 0.01]",
                self.target_abs_error
            )));
        }
        Ok(self)
    }
}

/// Covariance of the contrast estimates, `C Sigma C'`.
pub(crate) fn contrast_covariance(
    c: &ContrastMatrix,
    sigma: &CovarianceEstimate,
) -> Result<DMatrix<f64>> {
    let q = c.n_rows();
    let m = c.n_cols();
    if sigma.matrix.nrows() != m {
        return Err(Error::InvalidConfig(format!(
            "contrast matrix has {m} columns but covariance is {}x{}",
            sigma.matrix.nrows(),
            sigma.matrix.ncols()
        )));
    }
    let cmat = DMatrix::from_fn(q, m, |i, j| c.rows[i][j]);
    Ok(&cmat * &sigma.matrix * cmat.transpose())
}

/// Normalize a contrast covariance to a correlation matrix, rejecting
/// zero-variance rows.
pub(crate) fn correlation_from_covariance(
    cov: &DMatrix<f64>,
    labels: &[String],
) -> Result<CorrelationMatrix> {
    let q = cov.nrows();
    let mut d = Vec::with_capacity(q);
    for i in 0..q {
        let v = cov[(i, i)];
        if !(v > 0.0) {
            return Err(Error::DegenerateVariance(format!(
                "contrast '{}' has zero variance",
                labels.get(i).map(String::as_str).unwrap_or("?")
            )));
        }
        d.push(v.sqrt());
    }
    let mut r = DMatrix::zeros(q, q);
    for i in 0..q {
        r[(i, i)] = 1.0;
        for j in 0..i {
            let v = (cov[(i, j)] / (d[i] * d[j])).clamp(-1.0, 1.0);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    CorrelationMatrix::new(r)
}

/// Correlation matrix of the contrast estimates:
/// `R = D^-1/2 (C Sigma C') D^-1/2` with `D = diag(C Sigma C')`.
pub fn correlation_from_contrasts(
    c: &ContrastMatrix,
    sigma: &CovarianceEstimate,
) -> Result<CorrelationMatrix> {
    let cov = contrast_covariance(c, sigma)?;
    correlation_from_covariance(&cov, &c.row_labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrasts::{williams_matrix, FactorLevels};
    use crate::covariance::{covariance, CovarianceKind};
    use crate::model::{fit_cell_means, Dataset};
    use approx::assert_abs_diff_eq;

    #[test]
    fn williams_k3_balanced_classical_correlation() {
        // rho(row_a, row_b) = 1.5 / sqrt(2 * 1.5) = 0.8660, independent of
        // the common per-cell variance.
        let mut triples = Vec::new();
        for dose in [0.0, 1.0, 2.0, 3.0] {
            for r in 0..4 {
                triples.push(("a".to_string(), dose, dose + 0.25 * r as f64));
            }
        }
        let d = Dataset::from_triples(&triples).unwrap();
        let m = fit_cell_means(&d).unwrap();
        let cov = covariance(&m, CovarianceKind::Classical).unwrap();
        let dose = FactorLevels::dose(
            "dose",
            vec!["0".into(), "1".into(), "2".into(), "3".into()],
            vec![4, 4, 4, 4],
        )
        .unwrap();
        let c = williams_matrix(&dose).unwrap();
        let r = correlation_from_contrasts(&c, &cov).unwrap();
        assert_abs_diff_eq!(r.entry(0, 1), 1.5 / 3.0f64.sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(r.entry(0, 1), 0.8660, epsilon = 1e-4);
        assert_abs_diff_eq!(r.entry(0, 0), 1.0, epsilon = 0.0);
    }

    #[test]
    fn orthogonal_contrasts_give_identity() {
        let c = crate::contrasts::ContrastMatrix::user_defined(
            vec![vec![1.0, -1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, -1.0]],
            vec!["a".into(), "b".into()],
            vec!["1".into(), "2".into(), "3".into(), "4".into()],
        )
        .unwrap();
        let sigma = CovarianceEstimate {
            matrix: DMatrix::identity(4, 4),
            estimator: CovarianceKind::Classical,
            df: 10,
        };
        let r = correlation_from_contrasts(&c, &sigma).unwrap();
        assert_eq!(r.dim(), 2);
        assert_abs_diff_eq!(r.entry(0, 1), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn single_contrast_gives_scalar_one() {
        let c = crate::contrasts::ContrastMatrix::user_defined(
            vec![vec![-1.0, 1.0]],
            vec!["a".into()],
            vec!["1".into(), "2".into()],
        )
        .unwrap();
        let sigma = CovarianceEstimate {
            matrix: DMatrix::identity(2, 2),
            estimator: CovarianceKind::Classical,
            df: 5,
        };
        let r = correlation_from_contrasts(&c, &sigma).unwrap();
        assert_eq!(r.dim(), 1);
        assert_eq!(r.entry(0, 0), 1.0);
    }

    #[test]
    fn zero_variance_contrast_is_rejected() {
        let c = crate::contrasts::ContrastMatrix::user_defined(
            vec![vec![1.0, -1.0]],
            vec!["a".into()],
            vec!["1".into(), "2".into()],
        )
        .unwrap();
        let sigma = CovarianceEstimate {
            matrix: DMatrix::zeros(2, 2),
            estimator: CovarianceKind::Hc0,
            df: 5,
        };
        assert!(matches!(
            correlation_from_contrasts(&c, &sigma),
            Err(Error::DegenerateVariance(_))
        ));
    }

    #[test]
    fn psd_validation_rejects_gross_indefiniteness() {
        let mut m = DMatrix::identity(3, 3);
        // Pairwise correlations of -0.9 cannot all hold simultaneously.
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    m[(i, j)] = -0.9;
                }
            }
        }
        assert!(matches!(CorrelationMatrix::new(m), Err(Error::NonPsd(_))));
    }

    #[test]
    fn singular_but_psd_matrices_are_accepted() {
        // Rank-1 correlation: all entries 1.
        let m = DMatrix::from_element(3, 3, 1.0);
        let r = CorrelationMatrix::new(m).unwrap();
        assert_eq!(r.dim(), 3);
    }

    #[test]
    fn qmc_config_bounds() {
        assert!(QmcConfig::default().validated().is_ok());
        assert!(QmcConfig {
            sample_budget: 10,
            ..QmcConfig::default()
        }
        .validated()
        .is_err());
        assert!(QmcConfig {
            sample_budget: 100_000_000,
            ..QmcConfig::default()
        }
        .validated()
        .is_err());
        assert!(QmcConfig {
            randomizations: 2,
            ..QmcConfig::default()
        }
        .validated()
        .is_err());
        assert!(QmcConfig {
            target_abs_error: 0.5,
            ..QmcConfig::default()
        }
        .validated()
        .is_err());
    }
}
