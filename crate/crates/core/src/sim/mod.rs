//! Simulation scenarios with known truth and the repetition runner that
//! compares the full method against its ablations, per-family defaults and
//! ground-truth oracles.

mod scenario;
mod study;

pub use scenario::{
    gen_asymmetric, gen_correlated, gen_symmetric, generate, welch_t, CorrelatedSpec, Covariance, ScenarioData,
    ScenarioKind, ScenarioSpec,
};
pub use study::{
    oracle_methods, run_study, run_study_with_bins, summarize, FamilyShare, Method, MethodCalibration, MetricRow,
    MetricSummary, StudyFailure, StudyResult,
};
