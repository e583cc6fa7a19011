//! Operating characteristics by simulation: familywise error under the
//! null, power under injected interactions, and global-equivalence rates.
//!
//! Each replicate draws a fresh dataset, runs the fitting and covariance
//! pipeline, and evaluates the single-step adjusted p-value of the most
//! extreme interaction contrast (the family rejects iff that one rejects,
//! and is globally equivalent iff that one clears the threshold), so one
//! multivariate t evaluation per replicate decides both counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::contrasts::{
    grand_mean_matrix, kronecker_interaction, parse_interaction_label, DoseContrastChoice,
    FactorLevels,
};
use crate::covariance::{covariance, CovarianceKind};
use crate::error::{Error, Result};
use crate::inference::Alternative;
use crate::model::{fit_cell_means, Dataset, Observation};
use crate::mvt::{contrast_covariance, correlation_from_covariance, mvt_rectangle_probability, QmcConfig};
use crate::synthetic::{ames_doses, dose_profile};

/// Per-cell residual standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub enum VariancePattern {
    /// Common unit variance.
    Homoscedastic,
    /// SD rises linearly with the dose index up to `max_ratio` at the top
    /// dose, the pattern typical of these assays.
    DoseIncreasing { max_ratio: f64 },
    /// Explicit per-cell SD multipliers in lab-major order.
    PerCell(Vec<f64>),
}

/// A data-generating configuration for the two-way layout. Responses are in
/// residual-SD units: effects of size 1 are one sigma.
#[derive(Debug, Clone)]
pub struct SimulationScenario {
    pub labs: usize,
    /// Number of dose groups above the control.
    pub dose_groups: usize,
    pub n_per_cell: usize,
    /// Half-range of the additive lab baselines (a pure main effect).
    pub lab_shift_spread: f64,
    /// Height of the shared saturating trend at the top dose.
    pub trend_amplitude: f64,
    /// Lab whose curve deviates (0-based), if any.
    pub interaction_lab: Option<usize>,
    /// Extra trend height for the deviating lab at the top dose.
    pub interaction_amplitude: f64,
    pub variance_pattern: VariancePattern,
    pub replicates: usize,
    pub seed: u64,
}

impl SimulationScenario {
    /// A null scenario of the motivating 7x7x6 design: shared trend,
    /// additive lab shifts, no interaction.
    pub fn ames_null(seed: u64, replicates: usize) -> Self {
        SimulationScenario {
            labs: 7,
            dose_groups: 6,
            n_per_cell: 6,
            lab_shift_spread: 1.5,
            trend_amplitude: 2.5,
            interaction_lab: None,
            interaction_amplitude: 0.0,
            variance_pattern: VariancePattern::Homoscedastic,
            replicates,
            seed,
        }
    }

    pub fn validated(self) -> Result<Self> {
        if self.labs < 2 || self.dose_groups < 1 || self.n_per_cell < 1 {
            return Err(Error::InvalidDesign(format!(
                "scenario needs >= 2 labs, >= 1 dose group, >= 1 replicate per cell; got {} / {} / {}",
                self.labs, self.dose_groups, self.n_per_cell
            )));
        }
        if self.replicates < 1 {
            return Err(Error::InvalidDesign("replicates must be >= 1".into()));
        }
        if let Some(lab) = self.interaction_lab {
            if lab >= self.labs {
                return Err(Error::InvalidDesign(format!(
                    "interaction lab {lab} out of range for {} labs",
                    self.labs
                )));
            }
        }
        let cells = self.labs * (self.dose_groups + 1);
        if let VariancePattern::PerCell(v) = &self.variance_pattern {
            if v.len() != cells {
                return Err(Error::InvalidDesign(format!(
                    "variance pattern has {} entries for {cells} cells",
                    v.len()
                )));
            }
            if v.iter().any(|s| !(*s > 0.0)) {
                return Err(Error::InvalidDesign(
                    "variance multipliers must be positive".into(),
                ));
            }
        }
        Ok(self)
    }

    /// Expected cell means in lab-major order.
    pub fn cell_means(&self) -> Vec<f64> {
        let doses = ames_doses(self.dose_groups);
        let profile = dose_profile(&doses);
        let l = self.labs;
        let mut means = Vec::with_capacity(l * doses.len());
        for lab in 0..l {
            let centered = if l > 1 {
                2.0 * lab as f64 / (l - 1) as f64 - 1.0
            } else {
                0.0
            };
            let shift = self.lab_shift_spread * centered;
            for p in &profile {
                let mut mu = shift + self.trend_amplitude * p;
                if Some(lab) == self.interaction_lab {
                    mu += self.interaction_amplitude * p;
                }
                means.push(mu);
            }
        }
        means
    }

    /// Per-cell SDs in lab-major order.
    pub fn cell_sds(&self) -> Vec<f64> {
        let m = self.dose_groups + 1;
        match &self.variance_pattern {
            VariancePattern::Homoscedastic => vec![1.0; self.labs * m],
            VariancePattern::DoseIncreasing { max_ratio } => {
                let mut out = Vec::with_capacity(self.labs * m);
                for _ in 0..self.labs {
                    for d in 0..m {
                        out.push(1.0 + (max_ratio - 1.0) * d as f64 / (m - 1) as f64);
                    }
                }
                out
            }
            VariancePattern::PerCell(v) => v.clone(),
        }
    }
}

/// How each simulated replicate is analyzed.
#[derive(Debug, Clone)]
pub struct SimulationSettings {
    pub dose_contrast: DoseContrastChoice,
    pub vcov: CovarianceKind,
    pub alternative: Alternative,
    pub alpha: f64,
    /// Equivalence threshold on adjusted p-values.
    pub p_threshold: f64,
    /// Also track rejections inside this lab's contrast block (for power
    /// against a known deviating lab).
    pub target_lab: Option<usize>,
    /// Skip the multivariate evaluation when even the unadjusted minimum p
    /// cannot reject; only valid when equivalence rates are not needed.
    pub track_equivalence: bool,
    pub qmc: QmcConfig,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        SimulationSettings {
            dose_contrast: DoseContrastChoice::Williams,
            vcov: CovarianceKind::Hc3,
            alternative: Alternative::TwoSided,
            alpha: 0.05,
            p_threshold: 0.10,
            target_lab: None,
            track_equivalence: true,
            qmc: QmcConfig {
                sample_budget: 2048,
                randomizations: 8,
                target_abs_error: 2e-3,
                seed: 0,
            },
        }
    }
}

/// Tabulated simulation outcome with binomial standard errors.
#[derive(Debug, Clone, serde::Serialize)]
pub struct OperatingCharacteristics {
    pub replicates: usize,
    /// Replicates with any adjusted p below alpha (FWER under a null
    /// scenario, power otherwise).
    pub rejections: usize,
    pub rejection_rate: f64,
    pub rejection_se: f64,
    /// Replicates where every adjusted p cleared the threshold.
    pub global_equivalence: Option<usize>,
    pub global_equivalence_rate: Option<f64>,
    pub global_equivalence_se: Option<f64>,
    /// Replicates where the target lab's block rejected at alpha.
    pub target_lab_rejections: Option<usize>,
    pub target_lab_rejection_rate: Option<f64>,
}

#[derive(Default)]
struct Counts {
    rejections: usize,
    global_equivalence: usize,
    target_rejections: usize,
}

/// Run the scenario and tabulate rejection / equivalence rates.
pub fn run_simulation(
    scenario: &SimulationScenario,
    settings: &SimulationSettings,
) -> Result<OperatingCharacteristics> {
    let scenario = scenario.clone().validated()?;
    let doses = ames_doses(scenario.dose_groups);
    let m = doses.len();
    let lab_levels: Vec<String> = (1..=scenario.labs).map(|i| format!("{i}")).collect();
    let dose_levels: Vec<String> = doses.iter().map(|d| format!("{d}")).collect();
    let lab_factor = FactorLevels::nominal(
        "lab",
        lab_levels.clone(),
        vec![scenario.n_per_cell * m; scenario.labs],
    )?;
    let dose_factor = FactorLevels::dose(
        "dose",
        dose_levels.clone(),
        vec![scenario.n_per_cell * scenario.labs; m],
    )?;
    let contrast = kronecker_interaction(
        &grand_mean_matrix(&lab_factor)?,
        &settings.dose_contrast.build(&dose_factor)?,
    )?;
    // Which contrast rows single out the target lab, via the same label
    // attribution the equivalence report uses.
    let target_rows: Vec<usize> = match settings.target_lab {
        Some(lab) => {
            let lab_label = &lab_levels[lab];
            contrast
                .row_labels
                .iter()
                .enumerate()
                .filter(|(_, l)| {
                    parse_interaction_label(l).map(|(f, _)| &f == lab_label).unwrap_or(false)
                })
                .map(|(i, _)| i)
                .collect()
        }
        None => Vec::new(),
    };

    let means = scenario.cell_means();
    let sds = scenario.cell_sds();

    let counts = (0..scenario.replicates)
        .into_par_iter()
        .map(|rep| {
            replicate_outcome(
                rep as u64,
                &scenario,
                settings,
                &lab_levels,
                &dose_levels,
                &contrast,
                &target_rows,
                &means,
                &sds,
            )
        })
        .try_reduce(
            Counts::default,
            |a, b| {
                Ok(Counts {
                    rejections: a.rejections + b.rejections,
                    global_equivalence: a.global_equivalence + b.global_equivalence,
                    target_rejections: a.target_rejections + b.target_rejections,
                })
            },
        )?;

    let r = scenario.replicates as f64;
    let rate = counts.rejections as f64 / r;
    let binom_se = |p: f64| (p * (1.0 - p) / r).sqrt();
    Ok(OperatingCharacteristics {
        replicates: scenario.replicates,
        rejections: counts.rejections,
        rejection_rate: rate,
        rejection_se: binom_se(rate),
        global_equivalence: settings.track_equivalence.then_some(counts.global_equivalence),
        global_equivalence_rate: settings
            .track_equivalence
            .then(|| counts.global_equivalence as f64 / r),
        global_equivalence_se: settings
            .track_equivalence
            .then(|| binom_se(counts.global_equivalence as f64 / r)),
        target_lab_rejections: settings.target_lab.map(|_| counts.target_rejections),
        target_lab_rejection_rate: settings
            .target_lab
            .map(|_| counts.target_rejections as f64 / r),
    })
}

#[allow(clippy::too_many_arguments)]
fn replicate_outcome(
    rep: u64,
    scenario: &SimulationScenario,
    settings: &SimulationSettings,
    lab_levels: &[String],
    dose_levels: &[String],
    contrast: &crate::contrasts::ContrastMatrix,
    target_rows: &[usize],
    means: &[f64],
    sds: &[f64],
) -> Result<Counts> {
    let m = dose_levels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(rep);
    let mut observations =
        Vec::with_capacity(scenario.labs * m * scenario.n_per_cell);
    for lab in 0..scenario.labs {
        for dose in 0..m {
            let c = lab * m + dose;
            for _ in 0..scenario.n_per_cell {
                let z: f64 = rng.sample(StandardNormal);
                observations.push(Observation {
                    lab,
                    dose,
                    response: means[c] + sds[c] * z,
                });
            }
        }
    }
    let dataset =
        Dataset::from_indexed(lab_levels.to_vec(), dose_levels.to_vec(), observations)?;
    let model = fit_cell_means(&dataset)?;
    let cov = covariance(&model, settings.vcov)?;
    let df = crate::inference::reference_df(contrast, &cov, &model.cell_sizes) as f64;

    let ccov = contrast_covariance(contrast, &cov)?;
    let q = contrast.n_rows();
    let mut folded = Vec::with_capacity(q);
    for j in 0..q {
        let var = ccov[(j, j)];
        if !(var > 0.0) {
            return Err(Error::DegenerateVariance(format!(
                "contrast '{}' has zero variance in replicate {rep}",
                contrast.row_labels[j]
            )));
        }
        let t = contrast.apply_row(j, &model.cell_means) / var.sqrt();
        folded.push(settings.alternative.fold_t(t));
    }
    let max_fold = folded.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    // The family's smallest adjusted p sits at the most extreme statistic.
    let t_dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::InvalidConfig(format!("t distribution: {e}")))?;
    let min_p_raw = match settings.alternative {
        Alternative::TwoSided => 2.0 * (1.0 - t_dist.cdf(max_fold.abs())),
        _ => 1.0 - t_dist.cdf(max_fold),
    };

    let mut counts = Counts::default();
    let needs_eval = settings.track_equivalence || min_p_raw < settings.alpha;
    if needs_eval {
        let r = correlation_from_covariance(&ccov, &contrast.row_labels)?;
        let qmc = QmcConfig {
            seed: settings.qmc.seed ^ rep.wrapping_mul(0x9E37_79B9_7F4A_7C15),
            ..settings.qmc.clone()
        };
        let min_p_adj = adjusted_p_at(max_fold, settings.alternative, &r, df, &qmc)?;
        if min_p_adj < settings.alpha {
            counts.rejections = 1;
        }
        if min_p_adj > settings.p_threshold {
            counts.global_equivalence = 1;
        }
        if !target_rows.is_empty() {
            let block_max = target_rows
                .iter()
                .map(|&j| folded[j])
                .fold(f64::NEG_INFINITY, f64::max);
            let block_p = adjusted_p_at(block_max, settings.alternative, &r, df, &qmc)?;
            if block_p < settings.alpha {
                counts.target_rejections = 1;
            }
        }
    }
    Ok(counts)
}

/// Single-step adjusted p of a folded statistic against the family.
fn adjusted_p_at(
    folded: f64,
    alternative: Alternative,
    r: &crate::mvt::CorrelationMatrix,
    df: f64,
    qmc: &QmcConfig,
) -> Result<f64> {
    if folded <= 0.0 {
        return Ok(1.0);
    }
    let q = r.dim();
    let (lower, upper) = match alternative {
        Alternative::TwoSided => (vec![-folded; q], vec![folded; q]),
        Alternative::Greater => (vec![f64::NEG_INFINITY; q], vec![folded; q]),
        Alternative::Less => (vec![-folded; q], vec![f64::INFINITY; q]),
    };
    let prob = mvt_rectangle_probability(&lower, &upper, r, df, qmc)?;
    Ok((1.0 - prob.value).clamp(0.0, 1.0))
}
