//! Deterministic synthetic assay data.
//!
//! The bundled example dataset reproduces the layout of a typical
//! interlaboratory fluctuation-assay validation study:
//! 7 laboratories, a negative control plus 6 geometrically spaced
//! concentrations up to 0.5, and 6 replicates per cell. Lab means differ by
//! additive shifts (lab 7 sits highest), every lab shares one saturating
//! monotone trend, and there is no built-in interaction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::model::{Dataset, Observation};

/// Seed of the committed example dataset.
pub const DEFAULT_SEED: u64 = 20240;

/// Additive per-lab baselines of the bundled dataset; lab 7's elevated
/// spontaneous rate is deliberate.
const LAB_BASELINES: [f64; 7] = [6.2, 6.8, 5.4, 6.5, 7.1, 5.9, 8.3];
const TREND_AMPLITUDE: f64 = 2.0;
const NOISE_SD: f64 = 0.8;
const REPLICATES: usize = 6;

/// Control plus `k` concentrations halving downward from 0.5, the design of
/// the motivating assay for `k = 6`.
pub fn ames_doses(k: usize) -> Vec<f64> {
    let mut doses = Vec::with_capacity(k + 1);
    doses.push(0.0);
    for i in 1..=k {
        doses.push(0.5 / f64::powi(2.0, (k - i) as i32));
    }
    doses
}

/// Saturating monotone response profile over the dose ladder, scaled to
/// reach 1 at the top dose (0 at the control).
pub fn dose_profile(doses: &[f64]) -> Vec<f64> {
    let positives: Vec<f64> = doses.iter().copied().filter(|d| *d > 0.0).collect();
    let log_center =
        positives.iter().map(|d| d.ln()).sum::<f64>() / positives.len().max(1) as f64;
    let d50 = log_center.exp();
    let top = doses.iter().cloned().fold(0.0f64, f64::max);
    let top_value = top / (top + d50);
    doses
        .iter()
        .map(|&d| (d / (d + d50)) / top_value)
        .collect()
}

/// Generate the bundled 7-lab dataset.
pub fn ames_synthetic_dataset(seed: u64) -> Result<Dataset> {
    let doses = ames_doses(6);
    let profile = dose_profile(&doses);
    let lab_levels: Vec<String> = (1..=7).map(|i| format!("{i}")).collect();
    let dose_levels: Vec<String> = doses.iter().map(|d| format!("{d}")).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observations = Vec::with_capacity(7 * doses.len() * REPLICATES);
    for (lab, baseline) in LAB_BASELINES.iter().enumerate() {
        for (dose, p) in profile.iter().enumerate() {
            let mean = baseline + TREND_AMPLITUDE * p;
            for _ in 0..REPLICATES {
                let noise: f64 = rng.sample(StandardNormal);
                observations.push(Observation {
                    lab,
                    dose,
                    response: mean + NOISE_SD * noise,
                });
            }
        }
    }
    Dataset::from_indexed(lab_levels, dose_levels, observations)
}

/// Render a dataset as the CSV format `load_csv` reads back.
pub fn dataset_to_csv(d: &Dataset) -> String {
    let labs = d.lab_factor().levels();
    let doses = d.dose_factor().levels();
    let mut out = String::from("lab,conc,response\n");
    for obs in d.observations() {
        out.push_str(&format!(
            "{},{},{:.4}\n",
            labs[obs.lab], doses[obs.dose], obs.response
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dose_ladder_matches_assay_design() {
        assert_eq!(
            ames_doses(6),
            vec![0.0, 0.015625, 0.03125, 0.0625, 0.125, 0.25, 0.5]
        );
        assert_eq!(ames_doses(1), vec![0.0, 0.5]);
    }

    #[test]
    fn profile_is_monotone_and_normalized() {
        let doses = ames_doses(6);
        let p = dose_profile(&doses);
        assert_eq!(p[0], 0.0);
        assert!((p[6] - 1.0).abs() < 1e-12);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bundled_dataset_shape_and_determinism() {
        let d = ames_synthetic_dataset(DEFAULT_SEED).unwrap();
        assert_eq!(d.n(), 294);
        assert_eq!(d.n_cells(), 49);
        assert_eq!(d.lab_factor().len(), 7);
        assert_eq!(d.dose_factor().levels()[1], "0.015625");

        let again = ames_synthetic_dataset(DEFAULT_SEED).unwrap();
        assert_eq!(dataset_to_csv(&d), dataset_to_csv(&again));
    }
}
