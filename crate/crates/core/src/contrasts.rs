//! Contrast matrices for dose, laboratory, and dose-by-laboratory factors.
//!
//! The dose factor is compared with Williams-type contrasts (control against
//! the replicate-weighted mean of the top `j` dose groups), the laboratory
//! factor with total-mean contrasts (each lab against the weighted mean of all
//! other labs), and the two are combined into interaction contrasts via the
//! Kronecker product. Interaction rows annihilate main effects, so a nonzero
//! interaction contrast measures a genuine difference in curve shape.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the row-sum-zero invariant.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// An ordered factor with per-level replicate counts.
///
/// Dose factors are ordered ascending with the control (lowest concentration)
/// first; laboratory factors keep their input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorLevels {
    name: String,
    levels: Vec<String>,
    sizes: Vec<usize>,
    /// True when the first level is a designated control group.
    control_first: bool,
}

impl FactorLevels {
    /// A dose factor: `levels[0]` is the control, the rest are doses in
    /// ascending order. Needs at least a control and one dose.
    pub fn dose(name: impl Into<String>, levels: Vec<String>, sizes: Vec<usize>) -> Result<Self> {
        Self::new(name, levels, sizes, true, 2)
    }

    /// An unordered factor (laboratories). A single level is allowed so that
    /// one-lab datasets remain loadable; contrast generators reject it.
    pub fn nominal(
        name: impl Into<String>,
        levels: Vec<String>,
        sizes: Vec<usize>,
    ) -> Result<Self> {
        Self::new(name, levels, sizes, false, 1)
    }

    fn new(
        name: impl Into<String>,
        levels: Vec<String>,
        sizes: Vec<usize>,
        control_first: bool,
        min_levels: usize,
    ) -> Result<Self> {
        let name = name.into();
        if levels.len() < min_levels {
            return Err(Error::InvalidDesign(format!(
                "factor '{}' needs at least {} levels, got {}",
                name,
                min_levels,
                levels.len()
            )));
        }
        if levels.len() != sizes.len() {
            return Err(Error::InvalidDesign(format!(
                "factor '{}': {} levels but {} sizes",
                name,
                levels.len(),
                sizes.len()
            )));
        }
        if let Some(pos) = sizes.iter().position(|&n| n == 0) {
            return Err(Error::InvalidDesign(format!(
                "factor '{}': level '{}' has zero replicates",
                name, levels[pos]
            )));
        }
        for (i, a) in levels.iter().enumerate() {
            if levels[i + 1..].contains(a) {
                return Err(Error::InvalidDesign(format!(
                    "factor '{}': duplicate level label '{}'",
                    name, a
                )));
            }
        }
        Ok(FactorLevels {
            name,
            levels,
            sizes,
            control_first,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of levels.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn has_control(&self) -> bool {
        self.control_first
    }
}

/// The contrast family a matrix was generated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContrastKind {
    Williams,
    GrandMean,
    HighestDose,
    Dunnett,
    UserDefined,
    Interaction,
}

impl std::fmt::Display for ContrastKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ContrastKind::Williams => "Williams",
            ContrastKind::GrandMean => "GrandMean",
            ContrastKind::HighestDose => "HighestDose",
            ContrastKind::Dunnett => "Dunnett",
            ContrastKind::UserDefined => "UserDefined",
            ContrastKind::Interaction => "Interaction",
        };
        f.write_str(s)
    }
}

/// A labeled q-by-m matrix of contrast weights over factor levels or cells.
///
/// Every row sums to zero (within [`ROW_SUM_TOL`]), so a row applied to a
/// vector of means estimates a pure comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastMatrix {
    pub kind: ContrastKind,
    pub row_labels: Vec<String>,
    pub column_labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ContrastMatrix {
    /// Wrap user-supplied weights, rejecting structural inconsistencies
    /// (invariant violations are reported by [`validate`] instead).
    pub fn user_defined(
        rows: Vec<Vec<f64>>,
        row_labels: Vec<String>,
        column_labels: Vec<String>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidDesign("contrast matrix with no rows".into()));
        }
        if rows.len() != row_labels.len() {
            return Err(Error::InvalidDesign(format!(
                "{} rows but {} row labels",
                rows.len(),
                row_labels.len()
            )));
        }
        if rows.iter().any(|r| r.len() != column_labels.len()) {
            return Err(Error::InvalidDesign(
                "row length does not match number of column labels".into(),
            ));
        }
        Ok(ContrastMatrix {
            kind: ContrastKind::UserDefined,
            row_labels,
            column_labels,
            rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_labels.len()
    }

    /// Apply row `r` to a vector of means.
    pub fn apply_row(&self, r: usize, means: &[f64]) -> f64 {
        self.rows[r]
            .iter()
            .zip(means)
            .map(|(w, m)| w * m)
            .sum()
    }

    /// Aligned plain-text rendering, one line per contrast row.
    pub fn to_text_table(&self) -> String {
        let mut cells: Vec<Vec<String>> = Vec::with_capacity(self.n_rows() + 1);
        let mut header = vec![String::new()];
        header.extend(self.column_labels.iter().cloned());
        cells.push(header);
        for (lab, row) in self.row_labels.iter().zip(&self.rows) {
            let mut line = vec![lab.clone()];
            line.extend(row.iter().map(|w| format_weight(*w)));
            cells.push(line);
        }
        let ncol = cells[0].len();
        let widths: Vec<usize> = (0..ncol)
            .map(|c| cells.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for line in &cells {
            for (c, field) in line.iter().enumerate() {
                if c == 0 {
                    out.push_str(&format!("{:<width$}", field, width = widths[0]));
                } else {
                    out.push_str(&format!("  {:>width$}", field, width = widths[c]));
                }
            }
            out.push('\n');
        }
        out
    }
}

fn format_weight(w: f64) -> String {
    if w == 0.0 {
        "0".to_string()
    } else if w == w.trunc() && w.abs() < 1e6 {
        format!("{}", w as i64)
    } else {
        let s = format!("{:.4}", w);
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Williams-type contrast matrix for a dose factor.
///
/// Row `j` (1-based, `j = 1..k`) compares the replicate-weighted mean of the
/// top `j` dose groups against the control: weight -1 on control and
/// `n_i / sum(n over the pooled top-j groups)` on each pooled group. Row 1 is
/// the highest dose alone, row `k` pools all doses.
pub fn williams_matrix(dose: &FactorLevels) -> Result<ContrastMatrix> {
    require_control(dose, "williams_matrix")?;
    let m = dose.len();
    let k = m - 1;
    let sizes = dose.sizes();
    let mut rows = Vec::with_capacity(k);
    let mut row_labels = Vec::with_capacity(k);
    for j in 1..=k {
        let pooled = &sizes[m - j..]; // top j dose groups
        let total: usize = pooled.iter().sum();
        let mut row = vec![0.0; m];
        row[0] = -1.0;
        for (offset, &n) in pooled.iter().enumerate() {
            row[m - j + offset] = n as f64 / total as f64;
        }
        row_labels.push(pos_neg_label(&row, dose.levels()));
        rows.push(row);
    }
    Ok(ContrastMatrix {
        kind: ContrastKind::Williams,
        row_labels,
        column_labels: dose.levels().to_vec(),
        rows,
    })
}

/// Total-mean contrast matrix for a nominal factor.
///
/// Row `j` compares level `j` (weight -1) against the replicate-weighted mean
/// of all other levels; in a balanced design the off-diagonal weights are
/// `1/(l-1)`.
pub fn grand_mean_matrix(lab: &FactorLevels) -> Result<ContrastMatrix> {
    let l = lab.len();
    if l < 2 {
        return Err(Error::InvalidDesign(format!(
            "grand_mean_matrix needs at least 2 levels, factor '{}' has {l}",
            lab.name()
        )));
    }
    let sizes = lab.sizes();
    let mut rows = Vec::with_capacity(l);
    let mut row_labels = Vec::with_capacity(l);
    for j in 0..l {
        let total: usize = sizes
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, &n)| n)
            .sum();
        let mut row = vec![0.0; l];
        for i in 0..l {
            row[i] = if i == j {
                -1.0
            } else {
                sizes[i] as f64 / total as f64
            };
        }
        row_labels.push(focal_vs_others(&row, lab.levels()));
        rows.push(row);
    }
    Ok(ContrastMatrix {
        kind: ContrastKind::GrandMean,
        row_labels,
        column_labels: lab.levels().to_vec(),
        rows,
    })
}

/// The single highest-dose-versus-control contrast, i.e. the first Williams
/// row on its own. A useful simplification under strict monotonicity, but it
/// should be avoided when downturns at high doses are plausible.
pub fn highest_dose_matrix(dose: &FactorLevels) -> Result<ContrastMatrix> {
    require_control(dose, "highest_dose_matrix")?;
    let m = dose.len();
    let mut row = vec![0.0; m];
    row[0] = -1.0;
    row[m - 1] = 1.0;
    let label = pos_neg_label(&row, dose.levels());
    Ok(ContrastMatrix {
        kind: ContrastKind::HighestDose,
        row_labels: vec![label],
        column_labels: dose.levels().to_vec(),
        rows: vec![row],
    })
}

/// Dunnett-type matrix: each dose against the control. Not used by the
/// interaction pipeline but handy for closure-style follow-ups.
pub fn dunnett_matrix(dose: &FactorLevels) -> Result<ContrastMatrix> {
    require_control(dose, "dunnett_matrix")?;
    let m = dose.len();
    let mut rows = Vec::with_capacity(m - 1);
    let mut row_labels = Vec::with_capacity(m - 1);
    for j in 1..m {
        let mut row = vec![0.0; m];
        row[0] = -1.0;
        row[j] = 1.0;
        row_labels.push(pos_neg_label(&row, dose.levels()));
        rows.push(row);
    }
    Ok(ContrastMatrix {
        kind: ContrastKind::Dunnett,
        row_labels,
        column_labels: dose.levels().to_vec(),
        rows,
    })
}

/// Which dose-factor contrast family drives an interaction analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoseContrastChoice {
    Williams,
    Highest,
}

impl DoseContrastChoice {
    pub fn build(self, dose: &FactorLevels) -> Result<ContrastMatrix> {
        match self {
            DoseContrastChoice::Williams => williams_matrix(dose),
            DoseContrastChoice::Highest => highest_dose_matrix(dose),
        }
    }
}

impl std::fmt::Display for DoseContrastChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DoseContrastChoice::Williams => f.write_str("williams"),
            DoseContrastChoice::Highest => f.write_str("highest"),
        }
    }
}

fn require_control(dose: &FactorLevels, what: &str) -> Result<()> {
    if !dose.has_control() {
        return Err(Error::InvalidDesign(format!(
            "{what} requires a dose factor with a control level"
        )));
    }
    Ok(())
}

/// Kronecker-product interaction matrix of a laboratory contrast and a dose
/// contrast.
///
/// Cells are ordered lab-major: all doses of the first lab, then all doses of
/// the second, and so on; the ordering is recorded in `column_labels` as
/// `lab:dose`. Row `r_lab * q_dose + r_dose` is the flattened outer product
/// of lab row `r_lab` with dose row `r_dose`, labeled
/// `((lab - others):pooled doses) - ((lab - others):control)`.
pub fn kronecker_interaction(
    c_lab: &ContrastMatrix,
    c_dose: &ContrastMatrix,
) -> Result<ContrastMatrix> {
    for (name, parent) in [("lab", c_lab), ("dose", c_dose)] {
        let violations = validate(parent);
        if !violations.is_empty() {
            return Err(Error::InvalidDesign(format!(
                "{name} parent is not a valid contrast matrix: {}",
                violations.join("; ")
            )));
        }
    }
    let (ql, qd) = (c_lab.n_rows(), c_dose.n_rows());
    let (ml, md) = (c_lab.n_cols(), c_dose.n_cols());

    let mut column_labels = Vec::with_capacity(ml * md);
    for lab in &c_lab.column_labels {
        for dose in &c_dose.column_labels {
            column_labels.push(format!("{lab}:{dose}"));
        }
    }

    let mut rows = Vec::with_capacity(ql * qd);
    let mut row_labels = Vec::with_capacity(ql * qd);
    for lab_weights in &c_lab.rows {
        let lab_part = focal_vs_others(lab_weights, &c_lab.column_labels);
        for dose_weights in &c_dose.rows {
            let mut row = Vec::with_capacity(ml * md);
            for &a in lab_weights {
                for &b in dose_weights {
                    row.push(a * b);
                }
            }
            let pos = signed_levels(dose_weights, &c_dose.column_labels, true);
            let neg = signed_levels(dose_weights, &c_dose.column_labels, false);
            row_labels.push(format!("(({lab_part}):{pos}) - (({lab_part}):{neg})"));
            rows.push(row);
        }
    }
    Ok(ContrastMatrix {
        kind: ContrastKind::Interaction,
        row_labels,
        column_labels,
        rows,
    })
}

/// `focal - others` with the focal level(s) carrying negative weight; the
/// form used for total-mean rows, e.g. `1 - 2,3,4,5,6,7`.
fn focal_vs_others(weights: &[f64], labels: &[String]) -> String {
    let focal = signed_levels(weights, labels, false);
    let others = signed_levels(weights, labels, true);
    format!("{focal} - {others}")
}

/// `pooled - reference` with the pooled level(s) carrying positive weight;
/// the form used for dose rows, e.g. `0.25,0.5 - 0`.
fn pos_neg_label(weights: &[f64], labels: &[String]) -> String {
    let pos = signed_levels(weights, labels, true);
    let neg = signed_levels(weights, labels, false);
    format!("{pos} - {neg}")
}

fn signed_levels(weights: &[f64], labels: &[String], positive: bool) -> String {
    let picked: Vec<&str> = weights
        .iter()
        .zip(labels)
        .filter(|(w, _)| if positive { **w > 0.0 } else { **w < 0.0 })
        .map(|(_, l)| l.as_str())
        .collect();
    picked.join(",")
}

/// Parse an interaction row label back into its focal laboratory and the
/// pooled dose set, e.g.
/// `((7 - 1,2,3,4,5,6):0.5) - ((7 - 1,2,3,4,5,6):0)` -> `("7", "0.5")`.
pub fn parse_interaction_label(label: &str) -> Result<(String, String)> {
    let bad = || Error::BadLabel(label.to_string());
    let inner = label.strip_prefix("((").ok_or_else(bad)?;
    let (lab_part, rest) = inner.split_once("):").ok_or_else(bad)?;
    let (focal, _others) = lab_part.split_once(" - ").ok_or_else(bad)?;
    let (doses, _rest) = rest.split_once(") - ((").ok_or_else(bad)?;
    Ok((focal.trim().to_string(), doses.trim().to_string()))
}

/// Check every [`ContrastMatrix`] invariant, returning one message per
/// violation (empty means valid). Validation never aborts.
pub fn validate(c: &ContrastMatrix) -> Vec<String> {
    let mut violations = Vec::new();
    if c.rows.is_empty() {
        violations.push("matrix has no rows".to_string());
    }
    if c.column_labels.len() < 2 {
        violations.push(format!(
            "matrix has {} columns, need at least 2",
            c.column_labels.len()
        ));
    }
    if c.row_labels.len() != c.rows.len() {
        violations.push(format!(
            "{} rows but {} row labels",
            c.rows.len(),
            c.row_labels.len()
        ));
    }
    for (i, row) in c.rows.iter().enumerate() {
        let rownum = i + 1;
        if row.len() != c.column_labels.len() {
            violations.push(format!(
                "row {rownum}: {} weights but {} columns",
                row.len(),
                c.column_labels.len()
            ));
            continue;
        }
        let sum: f64 = row.iter().sum();
        if sum.abs() > ROW_SUM_TOL {
            violations.push(format!("row {rownum}: sum = {sum} ≠ 0"));
        }
        if row.iter().all(|w| *w == 0.0) {
            violations.push(format!("row {rownum}: all weights zero"));
        }
        if row.iter().any(|w| !w.is_finite()) {
            violations.push(format!("row {rownum}: non-finite weight"));
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn balanced_dose(k: usize, n: usize) -> FactorLevels {
        let levels: Vec<String> = (0..=k).map(|i| format!("{i}")).collect();
        FactorLevels::dose("dose", levels, vec![n; k + 1]).unwrap()
    }

    fn balanced_labs(l: usize, n: usize) -> FactorLevels {
        let levels: Vec<String> = (1..=l).map(|i| format!("{i}")).collect();
        FactorLevels::nominal("lab", levels, vec![n; l]).unwrap()
    }

    #[test]
    fn williams_k3_balanced_canonical_weights() {
        let c = williams_matrix(&balanced_dose(3, 6)).unwrap();
        assert_eq!(c.rows.len(), 3);
        assert_eq!(c.rows[0], vec![-1.0, 0.0, 0.0, 1.0]);
        assert_eq!(c.rows[1], vec![-1.0, 0.0, 0.5, 0.5]);
        assert_eq!(c.rows[2], vec![-1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn williams_one_dose_degenerates_to_two_sample_contrast() {
        let c = williams_matrix(&balanced_dose(1, 3)).unwrap();
        assert_eq!(c.rows, vec![vec![-1.0, 1.0]]);
    }

    #[test]
    fn williams_unbalanced_uses_replicate_weighted_pooling() {
        let dose = FactorLevels::dose(
            "dose",
            vec!["0".into(), "1".into(), "2".into()],
            vec![4, 2, 6],
        )
        .unwrap();
        let c = williams_matrix(&dose).unwrap();
        assert_eq!(c.rows[0], vec![-1.0, 0.0, 1.0]);
        assert_eq!(c.rows[1], vec![-1.0, 2.0 / 8.0, 6.0 / 8.0]);
    }

    #[test]
    fn grand_mean_l4_balanced_canonical_weights() {
        let c = grand_mean_matrix(&balanced_labs(4, 6)).unwrap();
        let third = 1.0 / 3.0;
        assert_eq!(c.rows[0], vec![-1.0, third, third, third]);
        assert_eq!(c.rows[1], vec![third, -1.0, third, third]);
        assert_eq!(c.rows[2], vec![third, third, -1.0, third]);
        assert_eq!(c.rows[3], vec![third, third, third, -1.0]);
    }

    #[test]
    fn grand_mean_two_labs() {
        let c = grand_mean_matrix(&balanced_labs(2, 3)).unwrap();
        assert_eq!(c.rows, vec![vec![-1.0, 1.0], vec![1.0, -1.0]]);
    }

    #[test]
    fn grand_mean_unbalanced_weights() {
        let lab = FactorLevels::nominal(
            "lab",
            vec!["1".into(), "2".into(), "3".into()],
            vec![6, 12, 6],
        )
        .unwrap();
        let c = grand_mean_matrix(&lab).unwrap();
        assert_eq!(c.rows[0], vec![-1.0, 12.0 / 18.0, 6.0 / 18.0]);
    }

    #[test]
    fn grand_mean_annihilates_constant_vectors() {
        for l in 2..=9 {
            for sizes in [vec![5; l], (1..=l).map(|i| 2 * i + 1).collect::<Vec<_>>()] {
                let levels: Vec<String> = (1..=l).map(|i| format!("{i}")).collect();
                let lab = FactorLevels::nominal("lab", levels, sizes).unwrap();
                let c = grand_mean_matrix(&lab).unwrap();
                let means = vec![7.25; l];
                for r in 0..c.n_rows() {
                    assert_abs_diff_eq!(c.apply_row(r, &means), 0.0, epsilon = 1e-12 * 7.25);
                }
            }
        }
    }

    #[test]
    fn highest_dose_ames_design() {
        let c = highest_dose_matrix(&balanced_dose(6, 6)).unwrap();
        assert_eq!(c.rows, vec![vec![-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]]);
    }

    #[test]
    fn highest_dose_equals_first_williams_row() {
        for k in [1usize, 3] {
            let dose = balanced_dose(k, 4);
            let h = highest_dose_matrix(&dose).unwrap();
            let w = williams_matrix(&dose).unwrap();
            assert_eq!(h.rows[0], w.rows[0]);
        }
    }

    #[test]
    fn dunnett_rows_compare_each_dose_to_control() {
        let c = dunnett_matrix(&balanced_dose(3, 2)).unwrap();
        assert_eq!(c.rows.len(), 3);
        assert_eq!(c.rows[1], vec![-1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn kronecker_ames_shape_and_labels() {
        let labs = balanced_labs(7, 42);
        let dose = FactorLevels::dose(
            "conc",
            vec![
                "0".into(),
                "0.015625".into(),
                "0.03125".into(),
                "0.0625".into(),
                "0.125".into(),
                "0.25".into(),
                "0.5".into(),
            ],
            vec![42; 7],
        )
        .unwrap();
        let ia = kronecker_interaction(
            &grand_mean_matrix(&labs).unwrap(),
            &williams_matrix(&dose).unwrap(),
        )
        .unwrap();
        assert_eq!(ia.n_rows(), 42);
        assert_eq!(ia.n_cols(), 49);
        assert_eq!(
            ia.row_labels[0],
            "((1 - 2,3,4,5,6,7):0.5) - ((1 - 2,3,4,5,6,7):0)"
        );
        assert_eq!(
            ia.row_labels[41],
            "((7 - 1,2,3,4,5,6):0.015625,0.03125,0.0625,0.125,0.25,0.5) - ((7 - 1,2,3,4,5,6):0)"
        );
        assert!(validate(&ia).is_empty());
    }

    #[test]
    fn kronecker_two_by_two() {
        let labs = balanced_labs(2, 3);
        let dose = balanced_dose(1, 3);
        let ia = kronecker_interaction(
            &grand_mean_matrix(&labs).unwrap(),
            &williams_matrix(&dose).unwrap(),
        )
        .unwrap();
        assert_eq!(ia.rows[0], vec![1.0, -1.0, -1.0, 1.0]);
        assert_eq!(ia.rows[1], vec![-1.0, 1.0, 1.0, -1.0]);
    }

    #[test]
    fn parse_interaction_label_roundtrip() {
        let (lab, doses) =
            parse_interaction_label("((7 - 1,2,3,4,5,6):0.25,0.5) - ((7 - 1,2,3,4,5,6):0)")
                .unwrap();
        assert_eq!(lab, "7");
        assert_eq!(doses, "0.25,0.5");
        assert!(parse_interaction_label("garbage").is_err());
    }

    #[test]
    fn validate_flags_bad_rows() {
        let good = williams_matrix(&balanced_dose(3, 2)).unwrap();
        assert!(validate(&good).is_empty());

        let mut bad = good.clone();
        bad.rows[0] = vec![1.0, 1.0, 0.0, 0.0];
        let v = validate(&bad);
        assert_eq!(v, vec!["row 1: sum = 2 ≠ 0".to_string()]);

        let mut zero = good;
        zero.rows[0] = vec![0.0; 4];
        let v = validate(&zero);
        assert_eq!(v, vec!["row 1: all weights zero".to_string()]);
    }

    #[test]
    fn factor_levels_rejects_bad_input() {
        assert!(FactorLevels::dose("d", vec!["0".into()], vec![3]).is_err());
        assert!(
            FactorLevels::dose("d", vec!["0".into(), "1".into()], vec![3, 0]).is_err()
        );
        assert!(
            FactorLevels::nominal("l", vec!["a".into(), "a".into()], vec![1, 1]).is_err()
        );
    }

    #[test]
    fn contrast_json_shape() {
        let c = williams_matrix(&balanced_dose(1, 2)).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["kind"], "Williams");
        assert!(v["rows"].is_array());
        assert!(v["row_labels"].is_array());
        assert!(v["column_labels"].is_array());
    }

    proptest! {
        /// Row j applied to cell means equals the n-weighted mean of the top
        /// j dose groups minus the control mean, computed directly.
        #[test]
        fn williams_rows_estimate_pooled_mean_differences(
            k in 1usize..=6,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let sizes: Vec<usize> = (0..=k).map(|_| rng.random_range(1..=9)).collect();
            let means: Vec<f64> = (0..=k).map(|_| rng.random_range(-5.0..5.0)).collect();
            let levels: Vec<String> = (0..=k).map(|i| format!("{i}")).collect();
            let dose = FactorLevels::dose("dose", levels, sizes.clone()).unwrap();
            let c = williams_matrix(&dose).unwrap();
            for j in 1..=k {
                let pooled_n: usize = sizes[k + 1 - j..].iter().sum();
                let pooled_mean: f64 = sizes[k + 1 - j..]
                    .iter()
                    .zip(&means[k + 1 - j..])
                    .map(|(&n, &m)| n as f64 * m)
                    .sum::<f64>() / pooled_n as f64;
                let expected = pooled_mean - means[0];
                prop_assert!((c.apply_row(j - 1, &means) - expected).abs() < 1e-10);
            }
        }

        /// Kronecker entries follow the declared index arithmetic exactly.
        #[test]
        fn kronecker_index_arithmetic(
            l in 2usize..=5,
            k in 1usize..=4,
            n in 1usize..=7,
        ) {
            let a = grand_mean_matrix(&balanced_labs(l, n)).unwrap();
            let b = williams_matrix(&balanced_dose(k, n)).unwrap();
            let ia = kronecker_interaction(&a, &b).unwrap();
            prop_assert_eq!(ia.n_rows(), a.n_rows() * b.n_rows());
            prop_assert_eq!(ia.n_cols(), a.n_cols() * b.n_cols());
            for r in 0..a.n_rows() {
                for s in 0..b.n_rows() {
                    for i in 0..a.n_cols() {
                        for t in 0..b.n_cols() {
                            let got = ia.rows[r * b.n_rows() + s][i * b.n_cols() + t];
                            prop_assert_eq!(got, a.rows[r][i] * b.rows[s][t]);
                        }
                    }
                }
            }
            for row in &ia.rows {
                let sum: f64 = row.iter().sum();
                prop_assert!(sum.abs() < ROW_SUM_TOL);
            }
        }

        /// Generated matrices always satisfy the row-sum invariant.
        #[test]
        fn generated_rows_sum_to_zero(l in 2usize..=8, k in 1usize..=6, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let lab_sizes: Vec<usize> = (0..l).map(|_| rng.random_range(1..=12)).collect();
            let dose_sizes: Vec<usize> = (0..=k).map(|_| rng.random_range(1..=12)).collect();
            let labs = FactorLevels::nominal(
                "lab",
                (1..=l).map(|i| format!("{i}")).collect(),
                lab_sizes,
            ).unwrap();
            let dose = FactorLevels::dose(
                "dose",
                (0..=k).map(|i| format!("{i}")).collect(),
                dose_sizes,
            ).unwrap();
            for m in [
                williams_matrix(&dose).unwrap(),
                grand_mean_matrix(&labs).unwrap(),
                highest_dose_matrix(&dose).unwrap(),
                dunnett_matrix(&dose).unwrap(),
            ] {
                prop_assert!(validate(&m).is_empty(), "violations: {:?}", validate(&m));
            }
        }
    }
}
