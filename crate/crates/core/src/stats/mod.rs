//! Mode baseline, understandable mistakes, cluster bootstrap, log-linear
//! regressions and baseline comparisons.

mod aggregate;
mod bootstrap;
mod mistakes;
mod mode;
mod regression;

pub use aggregate::{aggregate_by_bitload, summarize_group, GroupSummary};
pub use bootstrap::{cluster_bootstrap_se, BootstrapResult, DEFAULT_REPLICATES};
pub use mistakes::understandable_mistake;
pub use mode::{mode_baseline_accuracy, mode_candidates, mode_prediction, tie_break_index};
pub use regression::{compare_to_baseline, fit_log_regression, Comparison, Covariate, Estimate, RegressionFit};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("no clusters to resample")]
    NoGroups,
    #[error("cluster {0} has no outcomes")]
    EmptyGroup(usize),
    #[error("replicates must be at least 1")]
    ZeroReplicates,
    #[error("regression needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("covariate value {0} is not positive")]
    NonPositiveCovariate(f64),
    #[error("covariate has zero variance")]
    ZeroCovariateVariance,
    #[error("standard errors must be finite and non-negative")]
    BadStandardError,
    #[error("unknown function {0:?}")]
    UnknownFunction(String),
}
