//! Shared helpers for the integration suites: independent oracle
//! implementations and random-instance generators.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trendsim_core::{CovarianceKind, Dataset, FittedCellMeansModel};

/// Generic sandwich estimator `(X'X)^-1 X' diag(w) X (X'X)^-1` evaluated on
/// the explicit indicator design matrix, with leverages taken from the hat
/// matrix rather than the per-cell shortcut. This is the independent route
/// the per-cell formulas are checked against.
pub fn generic_matrix_sandwich(
    d: &Dataset,
    model: &FittedCellMeansModel,
    kind: CovarianceKind,
) -> DMatrix<f64> {
    let n = d.n();
    let k = d.n_cells();
    let mut x = DMatrix::<f64>::zeros(n, k);
    for (i, obs) in d.observations().iter().enumerate() {
        x[(i, d.cell_index(obs))] = 1.0;
    }
    let xtx = x.transpose() * &x;
    let bread = xtx.try_inverse().expect("full-rank design");
    let hat = &x * &bread * x.transpose();

    let weights: Vec<f64> = model
        .residuals
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let e2 = e * e;
            match kind {
                CovarianceKind::Classical => unreachable!("sandwich oracle is HC-only"),
                CovarianceKind::Hc0 => e2,
                CovarianceKind::Hc1 => e2 * n as f64 / (n - k) as f64,
                CovarianceKind::Hc3 => {
                    let h = hat[(i, i)];
                    e2 / ((1.0 - h) * (1.0 - h))
                }
            }
        })
        .collect();

    let mut meat = DMatrix::<f64>::zeros(k, k);
    for i in 0..n {
        let w = weights[i];
        for r in 0..k {
            if x[(i, r)] == 0.0 {
                continue;
            }
            for c in 0..k {
                meat[(r, c)] += w * x[(i, r)] * x[(i, c)];
            }
        }
    }
    &bread * meat * &bread
}

/// Random complete two-way dataset with every cell size at least 2.
pub fn random_dataset(seed: u64, labs: usize, dose_groups: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples = Vec::new();
    for lab in 1..=labs {
        for dose_idx in 0..=dose_groups {
            let dose = dose_idx as f64 * 0.5;
            let n_c = rng.random_range(2..=5);
            let cell_scale = rng.random_range(0.5..2.0);
            for _ in 0..n_c {
                let y = rng.random_range(-1.0..1.0) * cell_scale
                    + dose
                    + lab as f64 * 0.3;
                triples.push((format!("{lab}"), dose, y));
            }
        }
    }
    Dataset::from_triples(&triples).expect("valid random dataset")
}

/// Random positive semidefinite correlation matrix via a normalized Gram
/// matrix of Gaussian loadings.
pub fn random_correlation(seed: u64, q: usize) -> trendsim_core::CorrelationMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = q + 3;
    let a = DMatrix::<f64>::from_fn(q, m, |_, _| {
        rng.sample::<f64, _>(rand_distr::StandardNormal)
    });
    let gram = &a * a.transpose();
    let d: Vec<f64> = (0..q).map(|i| gram[(i, i)].sqrt()).collect();
    let mut r = DMatrix::<f64>::identity(q, q);
    for i in 0..q {
        for j in 0..i {
            let v = gram[(i, j)] / (d[i] * d[j]);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    trendsim_core::CorrelationMatrix::new(r).expect("gram matrices are psd")
}
