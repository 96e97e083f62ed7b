//! Measurements over tutor event logs: hint usage, test performance, prior
//! proficiency, training effort, and student clustering.

pub mod cluster;
pub mod log;
pub mod metrics;
pub mod proficiency;
pub mod report;
pub mod stats;

use thiserror::Error;
use tutor_core::session::Phase;

pub use cluster::{
    choose_k, cluster_indices, cut_tree, standardize, ward_cluster, ward_linkage, ClusterIndices, ClusterModel, Merge,
    Standardization,
};
pub use log::{reconstruct, AttemptEnd, AttemptRecord, HintRecord, SessionLog};
pub use metrics::{
    effort_metrics, hint_metrics, performance_metrics, student_metrics, EffortMetrics, HintCounts, HintMetrics,
    PerformanceMetrics, StudentMetrics, GAP_CAP_MS,
};
pub use proficiency::{proficiency_split, Proficiency, ProficiencyClass, ProficiencyInput};
pub use report::{analyze, cluster_features, CohortReport, CorrelationRow, CLUSTER_FEATURES, K_RANGE};
pub use stats::pearson_corr;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("log is empty")]
    EmptyLog,
    #[error("log event {seq}: {reason}")]
    CorruptLog { seq: u64, reason: String },
    #[error("{phase:?} phase is incomplete: {solved} of {required} problems solved")]
    IncompletePhase { phase: Phase, solved: usize, required: usize },
    #[error("cohort needs at least 2 students, got {0}")]
    CohortTooSmall(usize),
    #[error("clustering needs at least {need} students, got {have}")]
    InsufficientData { need: usize, have: usize },
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("a vector has zero variance")]
    ZeroVariance,
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("need at least 2 clusters")]
    TooFewClusters,
}
