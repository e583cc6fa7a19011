//! Simultaneous inference for the similarity of dose-response curves across
//! laboratories.
//!
//! The pipeline: ingest long-format assay data ([`model`]), build
//! Williams-by-total-mean interaction contrasts ([`contrasts`]), fit the
//! cell-means model with classical or heteroscedasticity-consistent
//! covariance ([`model`], [`covariance`]), and run the max-t test with
//! single-step adjusted p-values and compatible simultaneous confidence
//! intervals against the multivariate t distribution ([`mvt`], [`inference`]).
//! Equivalence verdicts read large adjusted p-values (the proof-of-hazard
//! convention `p > 0.10`) as support for similarity.

pub mod contrasts;
pub mod covariance;
pub mod error;
pub mod inference;
pub mod model;
pub mod mvt;
pub mod report;
pub mod simulate;
pub mod synthetic;

pub use contrasts::{
    dunnett_matrix, grand_mean_matrix, highest_dose_matrix, kronecker_interaction,
    parse_interaction_label, validate, williams_matrix, ContrastKind, ContrastMatrix,
    DoseContrastChoice, FactorLevels,
};
pub use covariance::{covariance, CovarianceEstimate, CovarianceKind};
pub use error::{Error, ErrorClass, Result};
pub use inference::{
    equivalence_report, max_t_test, simultaneous_ci, Alternative, ContrastRecord,
    ContrastVerdict, EquivalenceMode, EquivalencePolicy, EquivalenceReport, GlobalVerdict,
    LabVerdict, MaxTResult,
};
pub use model::{
    apply_transform, cell_table, fit_cell_means, interaction_f_test, load_csv, CellSummary,
    CsvSchema, Dataset, FTestResult, FittedCellMeansModel, Observation, Transform,
    TransformKind,
};
pub use mvt::{
    correlation_from_contrasts, equicoordinate_quantile, mvt_rectangle_probability,
    CorrelationMatrix, MvtProbability, QmcConfig, QuantileResult, Tail,
};
pub use report::AnalysisReport;
pub use simulate::{
    run_simulation, OperatingCharacteristics, SimulationScenario, SimulationSettings,
    VariancePattern,
};
