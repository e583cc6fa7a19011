//! Covariance estimates of the fitted cell means.
//!
//! Because the cell-means design matrix is orthogonal (one indicator column
//! per cell), the generic sandwich `(X'X)^-1 X' diag(w) X (X'X)^-1` collapses
//! to per-cell diagonal entries, which is what this module computes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FittedCellMeansModel;

/// Which covariance estimator to use for the cell means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceKind {
    /// Homoscedastic `S^2 / n_c` per cell.
    Classical,
    /// White's estimator: `sum(e^2)_c / n_c^2`.
    Hc0,
    /// HC0 with the degrees-of-freedom correction `N / (N - K)`.
    Hc1,
    /// Jackknife-like leverage reweighting; the default for heteroscedastic
    /// assay data.
    Hc3,
}

impl std::fmt::Display for CovarianceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CovarianceKind::Classical => "classical",
            CovarianceKind::Hc0 => "hc0",
            CovarianceKind::Hc1 => "hc1",
            CovarianceKind::Hc3 => "hc3",
        };
        f.write_str(s)
    }
}

/// A K-by-K covariance matrix of the cell-mean estimates, plus the degrees
/// of freedom carried into the multivariate t reference.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub matrix: DMatrix<f64>,
    pub estimator: CovarianceKind,
    pub df: usize,
}

/// Estimate the covariance of the cell means.
///
/// All estimators keep `df = N - K`; the sandwich flavors only replace the
/// diagonal variance entries.
pub fn covariance(m: &FittedCellMeansModel, kind: CovarianceKind) -> Result<CovarianceEstimate> {
    let k_cells = m.cell_sizes.len();
    let n: usize = m.cell_sizes.iter().sum();
    let diag: Vec<f64> = match kind {
        CovarianceKind::Classical => m
            .cell_sizes
            .iter()
            .map(|&nc| m.pooled_variance / nc as f64)
            .collect(),
        CovarianceKind::Hc0 | CovarianceKind::Hc1 | CovarianceKind::Hc3 => {
            if kind == CovarianceKind::Hc3 {
                if let Some(c) = m.cell_sizes.iter().position(|&nc| nc < 2) {
                    return Err(Error::DegenerateVariance(format!(
                        "hc3 requires at least 2 observations per cell; cell {} has {}",
                        c + 1,
                        m.cell_sizes[c]
                    )));
                }
            }
            let mut meat = vec![0.0f64; k_cells];
            for (&c, &e) in m.cell_of_obs.iter().zip(&m.residuals) {
                let w = match kind {
                    CovarianceKind::Hc3 => {
                        let one_minus_h = 1.0 - 1.0 / m.cell_sizes[c] as f64;
                        (e / one_minus_h).powi(2)
                    }
                    _ => e * e,
                };
                meat[c] += w;
            }
            let scale = if kind == CovarianceKind::Hc1 {
                n as f64 / m.df_resid as f64
            } else {
                1.0
            };
            meat.iter()
                .zip(&m.cell_sizes)
                .map(|(s, &nc)| scale * s / (nc as f64 * nc as f64))
                .collect()
        }
    };
    let mut matrix = DMatrix::zeros(k_cells, k_cells);
    for (c, v) in diag.into_iter().enumerate() {
        matrix[(c, c)] = v;
    }
    Ok(CovarianceEstimate {
        matrix,
        estimator: kind,
        df: m.df_resid,
    })
}
