//! The analysis report: the JSON document emitted by the CLI and consumed
//! by the forest plot, plus its plain-text rendering.

use serde::{Deserialize, Serialize};

use crate::contrasts::DoseContrastChoice;
use crate::covariance::CovarianceKind;
use crate::error::{Error, Result};
use crate::inference::{
    Alternative, EquivalencePolicy, EquivalenceReport, GlobalVerdict, LabVerdict, MaxTResult,
};
use crate::model::{cell_table, CellSummary, Dataset, FTestResult, FittedCellMeansModel};

/// The design block of the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignSummary {
    pub labs: Vec<String>,
    pub doses: Vec<String>,
    pub n_total: usize,
    pub transform: String,
    pub cells: Vec<CellSummary>,
}

/// One contrast line of the report. Infinite interval ends (one-sided
/// analyses) serialize as `null`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportContrast {
    pub label: String,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p_raw: f64,
    pub p_adj: f64,
    pub ci: (Option<f64>, Option<f64>),
    pub equivalent: bool,
    pub borderline: bool,
}

impl ReportContrast {
    pub fn ci_lower(&self) -> f64 {
        self.ci.0.unwrap_or(f64::NEG_INFINITY)
    }

    pub fn ci_upper(&self) -> f64 {
        self.ci.1.unwrap_or(f64::INFINITY)
    }
}

/// Full analysis output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub design: DesignSummary,
    pub contrast_kind: String,
    pub estimator: CovarianceKind,
    pub alternative: Alternative,
    /// Simultaneous level parameter of the intervals: they cover at
    /// `1 - alpha`, compatible with `p_adj < alpha` rejections.
    pub alpha: f64,
    pub df: usize,
    pub critical_value: f64,
    pub mvt_error: f64,
    pub seed: u64,
    pub policy: EquivalencePolicy,
    pub contrasts: Vec<ReportContrast>,
    pub per_lab: Vec<LabVerdict>,
    pub global_verdict: GlobalVerdict,
    pub f_test: FTestResult,
}

impl AnalysisReport {
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        dataset: &Dataset,
        model: &FittedCellMeansModel,
        dose_contrast: DoseContrastChoice,
        result: &MaxTResult,
        equivalence: &EquivalenceReport,
        f_test: FTestResult,
        seed: u64,
    ) -> Self {
        let to_opt = |v: f64| if v.is_finite() { Some(v) } else { None };
        let contrasts = result
            .contrasts
            .iter()
            .zip(&equivalence.contrasts)
            .map(|(r, v)| ReportContrast {
                label: r.label.clone(),
                estimate: r.estimate,
                se: r.se,
                t: r.t,
                p_raw: r.p_raw,
                p_adj: r.p_adjusted,
                ci: (to_opt(r.ci_lower), to_opt(r.ci_upper)),
                equivalent: v.equivalent,
                borderline: r.borderline,
            })
            .collect();
        AnalysisReport {
            design: DesignSummary {
                labs: dataset.lab_factor().levels().to_vec(),
                doses: dataset.dose_factor().levels().to_vec(),
                n_total: dataset.n(),
                transform: dataset.transform_applied().to_string(),
                cells: cell_table(dataset, model),
            },
            contrast_kind: format!("{dose_contrast} x grand-mean interaction"),
            estimator: result.estimator,
            alternative: result.alternative,
            alpha: result.alpha,
            df: result.df,
            critical_value: result.critical_value,
            mvt_error: result.mvt_error,
            seed,
            policy: equivalence.policy,
            contrasts,
            per_lab: equivalence.per_lab.clone(),
            global_verdict: equivalence.global.clone(),
            f_test,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::BadReport(e.to_string()))
    }

    /// Aligned human-readable rendering; numbers match the JSON up to the
    /// printed precision.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "Design: {} labs x {} dose levels, N = {} ({} transform)\n",
            self.design.labs.len(),
            self.design.doses.len(),
            self.design.n_total,
            self.design.transform,
        ));
        out.push_str(&format!(
            "Contrasts: {} | vcov: {} | alternative: {} | df = {}\n",
            self.contrast_kind, self.estimator, self.alternative, self.df,
        ));
        out.push_str(&format!(
            "Simultaneous level: {:.0}% (alpha = {}) | critical value = {:.4} | mvt err = {:.1e}\n",
            100.0 * (1.0 - self.alpha),
            self.alpha,
            self.critical_value,
            self.mvt_error,
        ));
        out.push_str(&format!(
            "Policy: {} with p > {} read as equivalent\n\n",
            self.policy.mode, self.policy.p_threshold,
        ));

        let mut table: Vec<[String; 8]> = Vec::with_capacity(self.contrasts.len() + 1);
        table.push([
            "contrast".into(),
            "estimate".into(),
            "se".into(),
            "t".into(),
            "p_raw".into(),
            "p_adj".into(),
            "ci".into(),
            "equiv".into(),
        ]);
        for r in &self.contrasts {
            let ci = format!(
                "[{}, {}]",
                format_bound(r.ci.0),
                format_bound(r.ci.1)
            );
            let mark = if r.equivalent { "yes" } else { "NO" };
            let mark = if r.borderline {
                format!("{mark}*")
            } else {
                mark.to_string()
            };
            table.push([
                r.label.clone(),
                format!("{:.4}", r.estimate),
                format!("{:.4}", r.se),
                format!("{:.3}", r.t),
                format_p(r.p_raw),
                format_p(r.p_adj),
                ci,
                mark,
            ]);
        }
        let widths: Vec<usize> = (0..8)
            .map(|c| table.iter().map(|row| row[c].chars().count()).max().unwrap())
            .collect();
        for row in &table {
            let mut line = String::new();
            for (c, field) in row.iter().enumerate() {
                if c == 0 {
                    line.push_str(&format!("{:<width$}", field, width = widths[0]));
                } else {
                    line.push_str(&format!("  {:>width$}", field, width = widths[c]));
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        if self.contrasts.iter().any(|r| r.borderline) {
            out.push_str("(* borderline: decision within Monte Carlo noise of the critical value)\n");
        }

        out.push_str("\nPer-laboratory equivalence:\n");
        for lab in &self.per_lab {
            out.push_str(&format!(
                "  lab {}: {} (min p = {})\n",
                lab.lab,
                if lab.all_equivalent { "equivalent" } else { "not equivalent" },
                format_p(lab.min_p),
            ));
        }
        out.push_str(&format!("Global verdict: {}\n", self.global_verdict));
        out.push_str(&format!(
            "Interaction F-test: F({}, {}) = {:.4}, p = {}\n",
            self.f_test.df1,
            self.f_test.df2,
            self.f_test.f,
            format_p(self.f_test.p),
        ));
        out
    }
}

fn format_bound(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "inf".to_string(),
    }
}

/// p-value formatting for text output: everything above 0.999 prints as
/// "0.999" (JSON keeps full precision).
pub fn format_p(p: f64) -> String {
    if p > 0.999 {
        "0.999".to_string()
    } else {
        format!("{p:.4}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_formatting_caps_high_values() {
        assert_eq!(format_p(0.9994), "0.999");
        assert_eq!(format_p(1.0), "0.999");
        assert_eq!(format_p(0.1511), "0.1511");
        assert_eq!(format_p(0.0001), "0.0001");
    }
}
