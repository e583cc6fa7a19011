//! The max-t test: single-step adjusted p-values, compatible simultaneous
//! confidence intervals, and equivalence verdicts.
//!
//! Each contrast's t statistic is referenced against the joint q-variate t
//! distribution with the shared residual degrees of freedom and the
//! correlation implied by the contrasts and covariance estimate. The
//! adjusted p-value of a contrast is one minus the probability of the box
//! its statistic defines; the confidence intervals use the equicoordinate
//! critical value, so `p_adj < alpha` and "CI excludes 0" agree up to
//! Monte Carlo noise (near-critical rows are flagged borderline).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::contrasts::{parse_interaction_label, ContrastMatrix};
use crate::covariance::{CovarianceEstimate, CovarianceKind};
use crate::error::{Error, Result};
use crate::model::FittedCellMeansModel;
use crate::mvt::quantile::QUANTILE_PROB_TOL;
use crate::mvt::{
    contrast_covariance, correlation_from_covariance, equicoordinate_quantile,
    mvt_rectangle_probability, CorrelationMatrix, QmcConfig, Tail,
};

/// Direction of the alternative hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    TwoSided,
    Greater,
    Less,
}

impl Alternative {
    /// The box family whose equicoordinate quantile calibrates this
    /// alternative.
    pub fn tail(self) -> Tail {
        match self {
            Alternative::TwoSided => Tail::TwoSidedBox,
            Alternative::Greater => Tail::LowerOneSided,
            Alternative::Less => Tail::UpperOneSided,
        }
    }

    /// Fold a t statistic so that "more extreme against H0" is "larger".
    pub fn fold_t(self, t: f64) -> f64 {
        match self {
            Alternative::TwoSided => t.abs(),
            Alternative::Greater => t,
            Alternative::Less => -t,
        }
    }
}

impl std::fmt::Display for Alternative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Alternative::TwoSided => "two-sided",
            Alternative::Greater => "greater",
            Alternative::Less => "less",
        };
        f.write_str(s)
    }
}

/// Per-contrast results of the max-t test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContrastRecord {
    pub label: String,
    /// Contrast applied to the cell means, in transformed-response units.
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    /// Lower simultaneous confidence limit (`-inf` for "less").
    pub ci_lower: f64,
    /// Upper simultaneous confidence limit (`+inf` for "greater").
    pub ci_upper: f64,
    /// The statistic sits within Monte Carlo noise of the critical value, so
    /// the p-vs-CI compatibility may flip either way.
    pub borderline: bool,
}

/// Joint result of the max-t test over a contrast family.
#[derive(Debug, Clone)]
pub struct MaxTResult {
    pub contrasts: Vec<ContrastRecord>,
    pub alternative: Alternative,
    pub alpha: f64,
    /// Reference degrees of freedom: `N - K` classically, the
    /// Welch-Satterthwaite effective df under sandwich covariances.
    pub df: usize,
    pub correlation: CorrelationMatrix,
    pub critical_value: f64,
    pub estimator: CovarianceKind,
    /// Largest standard error among the multivariate t evaluations.
    pub mvt_error: f64,
}

/// Shared reference degrees of freedom for a contrast family.
///
/// Under the classical pooled variance the t statistics are exactly jointly
/// multivariate t with `N - K` degrees of freedom. Sandwich estimates are
/// built from per-cell variances with only `n_c - 1` degrees of freedom
/// each, and pretending to `N - K` understates the tails badly enough to
/// inflate the familywise error at small cell sizes; the
/// Welch-Satterthwaite effective df of the most shortchanged contrast is
/// used instead (floored, clamped to `[1, N - K]`).
pub(crate) fn reference_df(
    c: &ContrastMatrix,
    cov: &CovarianceEstimate,
    cell_sizes: &[usize],
) -> usize {
    if cov.estimator == CovarianceKind::Classical {
        return cov.df;
    }
    let mut min_df = f64::INFINITY;
    for row in &c.rows {
        let mut total = 0.0f64;
        let mut curvature = 0.0f64;
        for (cell, w) in row.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let a = w * w * cov.matrix[(cell, cell)];
            total += a;
            let cell_df = (cell_sizes[cell].max(2) - 1) as f64;
            curvature += a * a / cell_df;
        }
        if curvature > 0.0 {
            min_df = min_df.min(total * total / curvature);
        }
    }
    if !min_df.is_finite() {
        return cov.df;
    }
    (min_df.floor() as usize).clamp(1, cov.df)
}

/// Run the max-t test of all contrast rows at level `alpha`.
///
/// Confidence intervals are simultaneous at level `1 - alpha` and use the
/// same critical value that calibrates the adjusted p-values. For sandwich
/// covariances the joint t reference uses the Welch-Satterthwaite effective
/// degrees of freedom (see [`reference_df`]); the classical estimator keeps
/// the exact `N - K`.
pub fn max_t_test(
    model: &FittedCellMeansModel,
    c: &ContrastMatrix,
    cov: &CovarianceEstimate,
    alternative: Alternative,
    alpha: f64,
    cfg: &QmcConfig,
) -> Result<MaxTResult> {
    if c.n_cols() != model.cell_means.len() {
        return Err(Error::InvalidConfig(format!(
            "contrast matrix has {} columns but the model has {} cells",
            c.n_cols(),
            model.cell_means.len()
        )));
    }
    if cov.df < 1 {
        return Err(Error::NonPositiveDf { df: cov.df as i64 });
    }
    let q = c.n_rows();
    let df_used = reference_df(c, cov, &model.cell_sizes);
    let df = df_used as f64;

    let contrast_cov = contrast_covariance(c, cov)?;
    let correlation = correlation_from_covariance(&contrast_cov, &c.row_labels)?;

    let mut estimates = Vec::with_capacity(q);
    let mut ses = Vec::with_capacity(q);
    for j in 0..q {
        let est: f64 = c.apply_row(j, &model.cell_means);
        let var = contrast_cov[(j, j)];
        if !(var > 0.0) {
            return Err(Error::DegenerateVariance(format!(
                "contrast '{}' has zero variance",
                c.row_labels[j]
            )));
        }
        estimates.push(est);
        ses.push(var.sqrt());
    }
    let t_stats: Vec<f64> = estimates.iter().zip(&ses).map(|(e, s)| e / s).collect();

    let t_dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::InvalidConfig(format!("t distribution: {e}")))?;
    let p_raws: Vec<f64> = t_stats
        .iter()
        .map(|&t| match alternative {
            Alternative::TwoSided => 2.0 * (1.0 - t_dist.cdf(t.abs())),
            Alternative::Greater => 1.0 - t_dist.cdf(t),
            Alternative::Less => t_dist.cdf(t),
        })
        .collect();

    // Single-step adjusted p: one minus the box probability at the observed
    // statistic.
    let mut p_adjusted = Vec::with_capacity(q);
    let mut p_errors = Vec::with_capacity(q);
    let mut mvt_error = 0.0f64;
    for &t in &t_stats {
        let folded = alternative.fold_t(t);
        if folded <= 0.0 {
            // The box is empty or degenerate; nothing can be less extreme.
            p_adjusted.push(1.0);
            p_errors.push(0.0);
            continue;
        }
        let (lower, upper) = match alternative {
            Alternative::TwoSided => (vec![-folded; q], vec![folded; q]),
            Alternative::Greater => (vec![f64::NEG_INFINITY; q], vec![folded; q]),
            Alternative::Less => (vec![-folded; q], vec![f64::INFINITY; q]),
        };
        let prob = mvt_rectangle_probability(&lower, &upper, &correlation, df, cfg)?;
        p_adjusted.push((1.0 - prob.value).clamp(0.0, 1.0));
        p_errors.push(prob.std_error);
        mvt_error = mvt_error.max(prob.std_error);
    }

    let quantile = equicoordinate_quantile(alpha, &correlation, df, alternative.tail(), cfg)?;
    let critical_value = quantile.value;
    mvt_error = mvt_error.max(quantile.std_error);

    let records = (0..q)
        .map(|j| {
            let (ci_lower, ci_upper) = match alternative {
                Alternative::TwoSided => (
                    estimates[j] - critical_value * ses[j],
                    estimates[j] + critical_value * ses[j],
                ),
                Alternative::Greater => (estimates[j] - critical_value * ses[j], f64::INFINITY),
                Alternative::Less => (f64::NEG_INFINITY, estimates[j] + critical_value * ses[j]),
            };
            // Flag rows whose rejection decision could flip within the
            // combined Monte Carlo noise of the p evaluation and the
            // critical-value search.
            let p_slack = QUANTILE_PROB_TOL + 3.0 * (p_errors[j] + quantile.std_error);
            let t_slack = 3.0 * mvt_error;
            let folded = alternative.fold_t(t_stats[j]);
            let borderline = (p_adjusted[j] - alpha).abs() <= p_slack
                || (folded - critical_value).abs() <= t_slack;
            ContrastRecord {
                label: c.row_labels[j].clone(),
                estimate: estimates[j],
                se: ses[j],
                t: t_stats[j],
                p_raw: p_raws[j],
                p_adjusted: p_adjusted[j],
                ci_lower,
                ci_upper,
                borderline,
            }
        })
        .collect();

    Ok(MaxTResult {
        contrasts: records,
        alternative,
        alpha,
        df: df_used,
        correlation,
        critical_value,
        estimator: cov.estimator,
        mvt_error,
    })
}

/// Extract the simultaneous confidence intervals as (label, lower, upper).
///
/// The intervals are at level `1 - alpha` of the test that produced the
/// result; for the similarity reading, run the test at `2 * alpha` so these
/// become the two-sided `1 - 2 alpha` intervals compatible with the
/// `p > 2 alpha` equivalence threshold.
pub fn simultaneous_ci(result: &MaxTResult) -> Vec<(String, f64, f64)> {
    result
        .contrasts
        .iter()
        .map(|r| (r.label.clone(), r.ci_lower, r.ci_upper))
        .collect()
}

/// How per-contrast p-values combine into equivalence claims.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivalenceMode {
    /// Adjusted p-values against the threshold: simultaneous statements per
    /// contrast, partial equivalence allowed.
    IutUit,
    /// Marginal (raw) p-values against the threshold: a single global claim
    /// at the marginal level.
    IutIut,
}

impl std::fmt::Display for EquivalenceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EquivalenceMode::IutUit => f.write_str("iut-uit"),
            EquivalenceMode::IutIut => f.write_str("iut-iut"),
        }
    }
}

/// Equivalence-reading policy: a contrast supports similarity when its
/// p-value (strictly) exceeds `p_threshold`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EquivalencePolicy {
    pub mode: EquivalenceMode,
    pub p_threshold: f64,
    pub alpha: f64,
}

impl Default for EquivalencePolicy {
    fn default() -> Self {
        EquivalencePolicy {
            mode: EquivalenceMode::IutUit,
            p_threshold: 0.10,
            alpha: 0.05,
        }
    }
}

impl EquivalencePolicy {
    pub fn validated(self) -> Result<Self> {
        if !(self.alpha > 0.0 && self.alpha <= self.p_threshold && self.p_threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "policy requires 0 < alpha <= p_threshold < 1, got alpha = {}, p_threshold = {}",
                self.alpha, self.p_threshold
            )));
        }
        Ok(self)
    }
}

/// Verdict for a single interaction contrast.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContrastVerdict {
    pub label: String,
    pub lab: String,
    pub p_used: f64,
    pub equivalent: bool,
}

/// Verdict aggregated over one laboratory's contrast block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabVerdict {
    pub lab: String,
    pub all_equivalent: bool,
    pub min_p: f64,
}

/// The overall similarity claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum GlobalVerdict {
    GlobalEquivalence,
    PartialEquivalence { equivalent_labs: Vec<String> },
    NoEquivalence,
}

impl std::fmt::Display for GlobalVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GlobalVerdict::GlobalEquivalence => f.write_str("global equivalence"),
            GlobalVerdict::PartialEquivalence { equivalent_labs } => {
                write!(f, "partial equivalence (labs {})", equivalent_labs.join(", "))
            }
            GlobalVerdict::NoEquivalence => f.write_str("no equivalence"),
        }
    }
}

/// Per-contrast, per-laboratory, and global equivalence verdicts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub contrasts: Vec<ContrastVerdict>,
    pub per_lab: Vec<LabVerdict>,
    pub global: GlobalVerdict,
    pub policy: EquivalencePolicy,
}

/// Read equivalence verdicts off a max-t result under the given policy.
///
/// Contrast labels must follow the interaction labeling scheme so each row
/// can be attributed to the laboratory it singles out. The threshold is
/// strict: `p = 0.10` does not support equivalence under `p > 0.10`.
pub fn equivalence_report(
    result: &MaxTResult,
    policy: &EquivalencePolicy,
) -> Result<EquivalenceReport> {
    let policy = policy.validated()?;
    let mut contrasts = Vec::with_capacity(result.contrasts.len());
    let mut lab_order: Vec<String> = Vec::new();
    for record in &result.contrasts {
        let (lab, _doses) = parse_interaction_label(&record.label)?;
        let p_used = match policy.mode {
            EquivalenceMode::IutUit => record.p_adjusted,
            EquivalenceMode::IutIut => record.p_raw,
        };
        if !lab_order.contains(&lab) {
            lab_order.push(lab.clone());
        }
        contrasts.push(ContrastVerdict {
            label: record.label.clone(),
            lab,
            p_used,
            equivalent: p_used > policy.p_threshold,
        });
    }

    let per_lab: Vec<LabVerdict> = lab_order
        .iter()
        .map(|lab| {
            let block: Vec<&ContrastVerdict> =
                contrasts.iter().filter(|v| &v.lab == lab).collect();
            LabVerdict {
                lab: lab.clone(),
                all_equivalent: block.iter().all(|v| v.equivalent),
                min_p: block
                    .iter()
                    .map(|v| v.p_used)
                    .fold(f64::INFINITY, f64::min),
            }
        })
        .collect();

    let equivalent_labs: Vec<String> = per_lab
        .iter()
        .filter(|v| v.all_equivalent)
        .map(|v| v.lab.clone())
        .collect();
    let global = if contrasts.iter().all(|v| v.equivalent) {
        GlobalVerdict::GlobalEquivalence
    } else if equivalent_labs.is_empty() {
        GlobalVerdict::NoEquivalence
    } else {
        GlobalVerdict::PartialEquivalence { equivalent_labs }
    };

    Ok(EquivalenceReport {
        contrasts,
        per_lab,
        global,
        policy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrasts::{grand_mean_matrix, kronecker_interaction, williams_matrix};
    use crate::covariance::covariance;
    use crate::model::{fit_cell_means, Dataset};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_group_dataset() -> Dataset {
        let triples: Vec<(String, f64, f64)> = [
            (0.0, 1.2),
            (0.0, 0.8),
            (0.0, 1.1),
            (0.0, 0.7),
            (1.0, 2.1),
            (1.0, 2.6),
            (1.0, 1.9),
            (1.0, 2.4),
        ]
        .iter()
        .map(|&(dose, y)| ("a".to_string(), dose, y))
        .collect();
        Dataset::from_triples(&triples).unwrap()
    }

    #[test]
    fn single_contrast_reduces_to_classical_t_inference() {
        let d = two_group_dataset();
        let m = fit_cell_means(&d).unwrap();
        let cov = covariance(&m, CovarianceKind::Classical).unwrap();
        let c = williams_matrix(d.dose_factor()).unwrap();
        let res = max_t_test(
            &m,
            &c,
            &cov,
            Alternative::TwoSided,
            0.05,
            &QmcConfig::default(),
        )
        .unwrap();
        let r = &res.contrasts[0];
        assert!((r.p_adjusted - r.p_raw).abs() <= 1e-3);

        let t_dist = StudentsT::new(0.0, 1.0, res.df as f64).unwrap();
        let classical = t_dist.inverse_cdf(0.975);
        assert!(
            (res.critical_value - classical).abs() < 0.02,
            "t* = {} vs t quantile {}",
            res.critical_value,
            classical
        );
        assert_abs_diff_eq!(
            r.ci_lower,
            r.estimate - res.critical_value * r.se,
            epsilon = 1e-12
        );
    }

    #[test]
    fn estimates_and_ses_are_exact_quadratic_forms() {
        let d = two_group_dataset();
        let m = fit_cell_means(&d).unwrap();
        let cov = covariance(&m, CovarianceKind::Hc0).unwrap();
        let c = williams_matrix(d.dose_factor()).unwrap();
        let res = max_t_test(
            &m,
            &c,
            &cov,
            Alternative::Greater,
            0.05,
            &QmcConfig::default(),
        )
        .unwrap();
        let r = &res.contrasts[0];
        let expected: f64 = c.rows[0]
            .iter()
            .zip(&m.cell_means)
            .map(|(w, mu)| w * mu)
            .sum();
        assert_eq!(r.estimate, expected);
        let mut var = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                var += c.rows[0][i] * cov.matrix[(i, j)] * c.rows[0][j];
            }
        }
        assert_abs_diff_eq!(r.se * r.se, var, epsilon = 1e-14);
        assert_eq!(r.ci_upper, f64::INFINITY);
    }

    fn interaction_result(
        triples: &[(String, f64, f64)],
        seed: u64,
    ) -> (Dataset, MaxTResult) {
        let d = Dataset::from_triples(triples).unwrap();
        let m = fit_cell_means(&d).unwrap();
        let cov = covariance(&m, CovarianceKind::Classical).unwrap();
        let ia = kronecker_interaction(
            &grand_mean_matrix(d.lab_factor()).unwrap(),
            &williams_matrix(d.dose_factor()).unwrap(),
        )
        .unwrap();
        let cfg = QmcConfig {
            sample_budget: 4096,
            randomizations: 8,
            seed,
            target_abs_error: 1e-3,
        };
        let res = max_t_test(&m, &ia, &cov, Alternative::TwoSided, 0.10, &cfg).unwrap();
        (d, res)
    }

    fn random_two_way(seed: u64) -> Vec<(String, f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut triples = Vec::new();
        for lab in 1..=3 {
            for dose in [0.0, 0.5, 1.0] {
                for _ in 0..4 {
                    triples.push((
                        format!("{lab}"),
                        dose,
                        rng.random_range(-1.0..1.0) + dose,
                    ));
                }
            }
        }
        triples
    }

    #[test]
    fn interaction_contrasts_annihilate_lab_main_effects() {
        let base = random_two_way(5);
        let (_, res0) = interaction_result(&base, 9);
        let shifted: Vec<(String, f64, f64)> = base
            .iter()
            .map(|(lab, dose, y)| {
                (lab.clone(), *dose, y + lab.parse::<f64>().unwrap() * 11.0)
            })
            .collect();
        let (_, res1) = interaction_result(&shifted, 9);
        for (a, b) in res0.contrasts.iter().zip(&res1.contrasts) {
            assert!(
                (a.estimate - b.estimate).abs() < 1e-9,
                "estimate moved under a pure lab shift: {} vs {}",
                a.estimate,
                b.estimate
            );
        }
    }

    #[test]
    fn dyadic_rescaling_leaves_p_values_bit_identical() {
        let base = random_two_way(6);
        let (_, res0) = interaction_result(&base, 4);
        let scaled: Vec<(String, f64, f64)> = base
            .iter()
            .map(|(lab, dose, y)| (lab.clone(), *dose, y * 4.0))
            .collect();
        let (_, res1) = interaction_result(&scaled, 4);
        for (a, b) in res0.contrasts.iter().zip(&res1.contrasts) {
            assert_eq!(a.p_adjusted.to_bits(), b.p_adjusted.to_bits());
            assert_eq!((a.estimate * 4.0).to_bits(), b.estimate.to_bits());
            assert!((a.t - b.t).abs() < 1e-9);
        }
    }

    fn table2_like_result(p_values: &[f64]) -> MaxTResult {
        let labs = 7;
        let contrasts = (1..=labs)
            .map(|lab| {
                let others: Vec<String> = (1..=labs)
                    .filter(|l| *l != lab)
                    .map(|l| l.to_string())
                    .collect();
                let lab_part = format!("{lab} - {}", others.join(","));
                ContrastRecord {
                    label: format!("(({lab_part}):0.5) - (({lab_part}):0)"),
                    estimate: 0.0,
                    se: 1.0,
                    t: 0.0,
                    p_raw: p_values[lab - 1],
                    p_adjusted: p_values[lab - 1],
                    ci_lower: -1.0,
                    ci_upper: 1.0,
                    borderline: false,
                }
            })
            .collect();
        MaxTResult {
            contrasts,
            alternative: Alternative::TwoSided,
            alpha: 0.10,
            df: 245,
            correlation: CorrelationMatrix::identity(labs),
            critical_value: 2.0,
            estimator: CovarianceKind::Hc3,
            mvt_error: 0.0,
        }
    }

    #[test]
    fn borderline_highest_dose_p_values_read_as_partial_equivalence() {
        let p = [0.985, 0.410, 0.999, 0.999, 0.584, 0.120, 0.100];
        let res = table2_like_result(&p);
        let report = equivalence_report(&res, &EquivalencePolicy::default()).unwrap();
        for lab in 0..6 {
            assert!(report.per_lab[lab].all_equivalent, "lab {} should pass", lab + 1);
        }
        assert!(!report.per_lab[6].all_equivalent, "p = 0.100 is not > 0.10");
        assert_eq!(
            report.global,
            GlobalVerdict::PartialEquivalence {
                equivalent_labs: (1..=6).map(|l| l.to_string()).collect()
            }
        );
    }

    #[test]
    fn unanimous_large_p_values_give_global_equivalence() {
        let res = table2_like_result(&[1.0; 7]);
        let report = equivalence_report(&res, &EquivalencePolicy::default()).unwrap();
        assert_eq!(report.global, GlobalVerdict::GlobalEquivalence);
        assert!(report.per_lab.iter().all(|l| l.all_equivalent));
    }

    #[test]
    fn one_failing_contrast_excludes_only_its_lab() {
        let mut p = [0.9; 7];
        p[2] = 0.01;
        let res = table2_like_result(&p);
        let report = equivalence_report(&res, &EquivalencePolicy::default()).unwrap();
        match &report.global {
            GlobalVerdict::PartialEquivalence { equivalent_labs } => {
                assert_eq!(equivalent_labs.len(), 6);
                assert!(!equivalent_labs.contains(&"3".to_string()));
            }
            other => panic!("expected partial equivalence, got {other:?}"),
        }
        assert_abs_diff_eq!(report.per_lab[2].min_p, 0.01, epsilon = 1e-15);
    }

    #[test]
    fn iut_iut_mode_uses_marginal_p_values() {
        let mut res = table2_like_result(&[0.9; 7]);
        // Adjusted p large but marginal p small: IUT-IUT must fail, IUT-UIT pass.
        res.contrasts[0].p_raw = 0.02;
        let policy = EquivalencePolicy {
            mode: EquivalenceMode::IutIut,
            ..EquivalencePolicy::default()
        };
        let marginal = equivalence_report(&res, &policy).unwrap();
        assert!(!marginal.contrasts[0].equivalent);
        let adjusted = equivalence_report(&res, &EquivalencePolicy::default()).unwrap();
        assert!(adjusted.contrasts[0].equivalent);
    }

    #[test]
    fn unparseable_labels_are_rejected() {
        let mut res = table2_like_result(&[0.9; 7]);
        res.contrasts[0].label = "contrast 1".into();
        assert!(matches!(
            equivalence_report(&res, &EquivalencePolicy::default()),
            Err(Error::BadLabel(_))
        ));
    }

    #[test]
    fn policy_invariants_are_enforced() {
        let bad = EquivalencePolicy {
            alpha: 0.2,
            p_threshold: 0.1,
            mode: EquivalenceMode::IutUit,
        };
        assert!(bad.validated().is_err());
        assert!(EquivalencePolicy::default().validated().is_ok());
    }

    #[test]
    fn simultaneous_ci_extracts_interval_columns() {
        let res = table2_like_result(&[0.9; 7]);
        let cis = simultaneous_ci(&res);
        assert_eq!(cis.len(), 7);
        assert_eq!(cis[0].1, -1.0);
        assert_eq!(cis[0].2, 1.0);
    }
}
