//! Long-format assay data, response transforms, and the cell-means model.
//!
//! The two-way layout is flattened into K = l*(k+1) cells in lab-major order
//! (all doses of lab 1, then lab 2, ...), matching the column ordering of the
//! interaction contrast matrices.

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::contrasts::FactorLevels;
use crate::error::{Error, Result};

/// One measured response of a (lab, dose) cell. Indices refer to the
/// dataset's factor levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub lab: usize,
    pub dose: usize,
    pub response: f64,
}

/// Which response transform has been applied to a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TransformKind {
    None,
    Log,
    Sqrt,
    FreemanTukey,
    Custom(String),
}

impl std::fmt::Display for TransformKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TransformKind::None => f.write_str("none"),
            TransformKind::Log => f.write_str("log"),
            TransformKind::Sqrt => f.write_str("sqrt"),
            TransformKind::FreemanTukey => f.write_str("freeman-tukey"),
            TransformKind::Custom(name) => write!(f, "custom:{name}"),
        }
    }
}

/// A response transform. `Custom` is the extension point for transforms not
/// built in (the variance-stabilizing transform used on revertant counts is
/// assay-specific, so callers supply their own).
#[derive(Clone, Copy)]
pub enum Transform {
    None,
    Log,
    Sqrt,
    /// `sqrt(x) + sqrt(x + 1)` for counts.
    FreemanTukey,
    Custom {
        name: &'static str,
        /// Returns `None` outside the transform's domain.
        func: fn(f64) -> Option<f64>,
    },
}

impl Transform {
    fn kind(&self) -> TransformKind {
        match self {
            Transform::None => TransformKind::None,
            Transform::Log => TransformKind::Log,
            Transform::Sqrt => TransformKind::Sqrt,
            Transform::FreemanTukey => TransformKind::FreemanTukey,
            Transform::Custom { name, .. } => TransformKind::Custom((*name).to_string()),
        }
    }

    fn apply(&self, x: f64) -> Option<f64> {
        match self {
            Transform::None => Some(x),
            Transform::Log => (x > 0.0).then(|| x.ln()),
            Transform::Sqrt => (x >= 0.0).then(|| x.sqrt()),
            Transform::FreemanTukey => (x >= 0.0).then(|| x.sqrt() + (x + 1.0).sqrt()),
            Transform::Custom { func, .. } => func(x),
        }
    }
}

/// Column-name mapping for CSV ingestion.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub lab: String,
    pub dose: String,
    pub response: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            lab: "lab".into(),
            dose: "conc".into(),
            response: "response".into(),
        }
    }
}

/// Long-format observations over a complete crossed lab-by-dose layout.
#[derive(Debug, Clone)]
pub struct Dataset {
    observations: Vec<Observation>,
    lab_factor: FactorLevels,
    dose_factor: FactorLevels,
    transform_applied: TransformKind,
}

impl Dataset {
    /// Build a dataset from raw (lab label, dose value, response) triples.
    ///
    /// Laboratories keep first-appearance order; doses are sorted ascending
    /// and the smallest becomes the control. Every crossed cell must contain
    /// at least one observation.
    pub fn from_triples(triples: &[(String, f64, f64)]) -> Result<Self> {
        if triples.is_empty() {
            return Err(Error::InvalidDesign("no observations".into()));
        }
        if let Some(i) = triples.iter().position(|(_, dose, _)| !dose.is_finite()) {
            return Err(Error::InvalidDesign(format!(
                "observation {} has a non-finite dose value",
                i + 1
            )));
        }
        let mut lab_levels: Vec<String> = Vec::new();
        for (lab, _, _) in triples {
            if !lab_levels.contains(lab) {
                lab_levels.push(lab.clone());
            }
        }
        let mut dose_values: Vec<f64> = Vec::new();
        for &(_, dose, _) in triples {
            if !dose_values.contains(&dose) {
                dose_values.push(dose);
            }
        }
        dose_values.sort_by(|a, b| a.partial_cmp(b).expect("finite dose values"));
        let dose_levels: Vec<String> = dose_values.iter().map(|d| format!("{d}")).collect();

        let observations = triples
            .iter()
            .map(|(lab, dose, response)| Observation {
                lab: lab_levels.iter().position(|l| l == lab).unwrap(),
                dose: dose_values.iter().position(|d| d == dose).unwrap(),
                response: *response,
            })
            .collect();
        Self::from_indexed(lab_levels, dose_levels, observations)
    }

    /// Build a dataset from pre-indexed observations. Level vectors define
    /// the layout; sizes are counted from the observations.
    pub fn from_indexed(
        lab_levels: Vec<String>,
        dose_levels: Vec<String>,
        observations: Vec<Observation>,
    ) -> Result<Self> {
        let l = lab_levels.len();
        let m = dose_levels.len();
        if l < 1 || m < 2 {
            return Err(Error::InvalidDesign(format!(
                "need at least 1 lab and 2 dose levels, got {l} and {m}"
            )));
        }
        let mut cell_counts = vec![0usize; l * m];
        for (i, obs) in observations.iter().enumerate() {
            if obs.lab >= l || obs.dose >= m {
                return Err(Error::InvalidDesign(format!(
                    "observation {} references level out of range",
                    i + 1
                )));
            }
            if !obs.response.is_finite() {
                return Err(Error::InvalidDesign(format!(
                    "observation {} has non-finite response",
                    i + 1
                )));
            }
            cell_counts[obs.lab * m + obs.dose] += 1;
        }
        for lab in 0..l {
            for dose in 0..m {
                if cell_counts[lab * m + dose] == 0 {
                    return Err(Error::EmptyCell {
                        lab: lab_levels[lab].clone(),
                        dose: dose_levels[dose].clone(),
                    });
                }
            }
        }
        let lab_sizes: Vec<usize> = (0..l)
            .map(|lab| (0..m).map(|d| cell_counts[lab * m + d]).sum())
            .collect();
        let dose_sizes: Vec<usize> = (0..m)
            .map(|d| (0..l).map(|lab| cell_counts[lab * m + d]).sum())
            .collect();
        let lab_factor = FactorLevels::nominal("lab", lab_levels, lab_sizes)?;
        let dose_factor = FactorLevels::dose("dose", dose_levels, dose_sizes)?;
        Ok(Dataset {
            observations,
            lab_factor,
            dose_factor,
            transform_applied: TransformKind::None,
        })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn lab_factor(&self) -> &FactorLevels {
        &self.lab_factor
    }

    pub fn dose_factor(&self) -> &FactorLevels {
        &self.dose_factor
    }

    pub fn transform_applied(&self) -> &TransformKind {
        &self.transform_applied
    }

    /// Total number of observations.
    pub fn n(&self) -> usize {
        self.observations.len()
    }

    /// Number of cells in the crossed layout.
    pub fn n_cells(&self) -> usize {
        self.lab_factor.len() * self.dose_factor.len()
    }

    /// Lab-major cell index of an observation.
    pub fn cell_index(&self, obs: &Observation) -> usize {
        obs.lab * self.dose_factor.len() + obs.dose
    }

    /// Cell labels in lab-major order, formatted `lab:dose`.
    pub fn cell_labels(&self) -> Vec<String> {
        let mut labels = Vec::with_capacity(self.n_cells());
        for lab in self.lab_factor.levels() {
            for dose in self.dose_factor.levels() {
                labels.push(format!("{lab}:{dose}"));
            }
        }
        labels
    }
}

/// Read a long-format CSV with a header row into a [`Dataset`].
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io {
            path: display.clone(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
        },
        _ => Error::Csv {
            path: display.clone(),
            source: e,
        },
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: display.clone(),
            source: e,
        })?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                column: name.to_string(),
                available: headers.iter().collect::<Vec<_>>().join(", "),
            })
    };
    let lab_col = col(&schema.lab)?;
    let dose_col = col(&schema.dose)?;
    let resp_col = col(&schema.response)?;

    let mut triples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header
        let record = record.map_err(|e| Error::Csv {
            path: display.clone(),
            source: e,
        })?;
        let field = |idx: usize, column: &str| -> Result<&str> {
            record.get(idx).ok_or_else(|| Error::ParseValue {
                row,
                column: column.to_string(),
                value: String::new(),
            })
        };
        let lab = field(lab_col, &schema.lab)?.trim().to_string();
        let dose_text = field(dose_col, &schema.dose)?.trim();
        let dose: f64 = dose_text
            .parse()
            .ok()
            .filter(|d: &f64| d.is_finite())
            .ok_or_else(|| Error::ParseValue {
                row,
                column: schema.dose.clone(),
                value: dose_text.to_string(),
            })?;
        let resp_text = field(resp_col, &schema.response)?.trim();
        let response: f64 = resp_text.parse().map_err(|_| Error::ParseValue {
            row,
            column: schema.response.clone(),
            value: resp_text.to_string(),
        })?;
        triples.push((lab, dose, response));
    }
    Dataset::from_triples(&triples)
}

/// Apply a response transform elementwise, recording it on the result.
pub fn apply_transform(d: &Dataset, t: Transform) -> Result<Dataset> {
    let mut out = d.clone();
    for (i, obs) in out.observations.iter_mut().enumerate() {
        match t.apply(obs.response) {
            Some(v) if v.is_finite() => obs.response = v,
            _ => {
                return Err(Error::TransformDomain {
                    row: i + 1,
                    transform: t.kind().to_string(),
                    value: obs.response,
                })
            }
        }
    }
    out.transform_applied = t.kind();
    Ok(out)
}

/// The fitted cell-means model: one free mean per (lab, dose) cell.
#[derive(Debug, Clone)]
pub struct FittedCellMeansModel {
    /// Per-cell means in lab-major order.
    pub cell_means: Vec<f64>,
    /// Per-cell replicate counts.
    pub cell_sizes: Vec<usize>,
    /// Per-observation residuals, aligned with the dataset's observations.
    pub residuals: Vec<f64>,
    /// Lab-major cell index of each observation, aligned with `residuals`.
    pub cell_of_obs: Vec<usize>,
    /// Residual degrees of freedom N - K.
    pub df_resid: usize,
    /// Pooled residual variance RSS / df_resid.
    pub pooled_variance: f64,
}

impl FittedCellMeansModel {
    /// All responses identical within machine precision; downstream t
    /// statistics are undefined.
    pub fn is_degenerate(&self) -> bool {
        self.pooled_variance == 0.0
    }
}

/// Fit the cell-means model by per-cell averaging.
pub fn fit_cell_means(d: &Dataset) -> Result<FittedCellMeansModel> {
    let k_cells = d.n_cells();
    let n = d.n();
    if n <= k_cells {
        return Err(Error::NonPositiveDf {
            df: n as i64 - k_cells as i64,
        });
    }
    let mut sums = vec![0.0f64; k_cells];
    let mut counts = vec![0usize; k_cells];
    for obs in d.observations() {
        let c = d.cell_index(obs);
        sums[c] += obs.response;
        counts[c] += 1;
    }
    let cell_means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let mut rss = 0.0;
    let cell_of_obs: Vec<usize> = d.observations().iter().map(|o| d.cell_index(o)).collect();
    let residuals: Vec<f64> = d
        .observations()
        .iter()
        .zip(&cell_of_obs)
        .map(|(obs, &c)| {
            let e = obs.response - cell_means[c];
            rss += e * e;
            e
        })
        .collect();
    let df_resid = n - k_cells;
    Ok(FittedCellMeansModel {
        cell_means,
        cell_sizes: counts,
        residuals,
        cell_of_obs,
        df_resid,
        pooled_variance: rss / df_resid as f64,
    })
}

/// One line of the fitted-cell summary table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSummary {
    pub lab: String,
    pub dose: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

/// Per-cell summary (lab, dose, n, mean, sd) in lab-major order.
pub fn cell_table(d: &Dataset, m: &FittedCellMeansModel) -> Vec<CellSummary> {
    let md = d.dose_factor().len();
    let mut ss = vec![0.0f64; d.n_cells()];
    for (obs, e) in d.observations().iter().zip(&m.residuals) {
        ss[d.cell_index(obs)] += e * e;
    }
    let mut out = Vec::with_capacity(d.n_cells());
    for (lab_i, lab) in d.lab_factor().levels().iter().enumerate() {
        for (dose_i, dose) in d.dose_factor().levels().iter().enumerate() {
            let c = lab_i * md + dose_i;
            let n = m.cell_sizes[c];
            let sd = if n > 1 {
                (ss[c] / (n as f64 - 1.0)).sqrt()
            } else {
                0.0
            };
            out.push(CellSummary {
                lab: lab.clone(),
                dose: dose.clone(),
                n,
                mean: m.cell_means[c],
                sd,
            });
        }
    }
    out
}

/// Classical two-way ANOVA interaction test.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FTestResult {
    #[serde(rename = "F")]
    pub f: f64,
    pub df1: usize,
    pub df2: usize,
    pub p: f64,
}

/// F-test of the dose-by-laboratory interaction.
///
/// The interaction sum of squares is the RSS difference between the additive
/// (main effects only) model and the full cell-means model, which reduces to
/// the textbook decomposition in balanced designs and stays well defined in
/// unbalanced ones.
pub fn interaction_f_test(d: &Dataset) -> Result<FTestResult> {
    let l = d.lab_factor().len();
    let m = d.dose_factor().len();
    let full = fit_cell_means(d)?;
    let df1 = (l - 1) * (m - 1);
    let df2 = full.df_resid;
    let rss_full: f64 = full.residuals.iter().map(|e| e * e).sum();
    if rss_full == 0.0 {
        return Err(Error::DegenerateVariance(
            "zero residual variance, interaction F undefined".into(),
        ));
    }
    let rss_add = additive_model_rss(d);
    let ss_int = (rss_add - rss_full).max(0.0);
    let f = (ss_int / df1 as f64) / (rss_full / df2 as f64);
    let dist = FisherSnedecor::new(df1 as f64, df2 as f64)
        .map_err(|e| Error::DegenerateVariance(format!("F distribution: {e}")))?;
    let p = 1.0 - dist.cdf(f);
    Ok(FTestResult { f, df1, df2, p })
}

/// RSS of the additive model `y = mu + lab_effect + dose_effect` via least
/// squares on a treatment-coded design matrix.
fn additive_model_rss(d: &Dataset) -> f64 {
    use nalgebra::{DMatrix, DVector};
    let l = d.lab_factor().len();
    let m = d.dose_factor().len();
    let n = d.n();
    let p = 1 + (l - 1) + (m - 1);
    let mut x = DMatrix::<f64>::zeros(n, p);
    let mut y = DVector::<f64>::zeros(n);
    for (i, obs) in d.observations().iter().enumerate() {
        x[(i, 0)] = 1.0;
        if obs.lab > 0 {
            x[(i, obs.lab)] = 1.0;
        }
        if obs.dose > 0 {
            x[(i, l - 1 + obs.dose)] = 1.0;
        }
        y[i] = obs.response;
    }
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &y;
    let beta = xtx
        .cholesky()
        .map(|ch| ch.solve(&xty))
        .unwrap_or_else(|| {
            // Fall back to SVD for rank-deficient designs.
            x.clone().svd(true, true).solve(&y, 1e-12).expect("svd solve")
        });
    let fitted = &x * beta;
    (0..n).map(|i| (y[i] - fitted[i]).powi(2)).sum()
}
