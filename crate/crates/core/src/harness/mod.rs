//! Repeated k-fold splitting, external system runs, and assembly of
//! paired difference series.

mod differences;
mod external;
mod scores;
mod splits;

pub use differences::{assemble_differences, DifferenceSeries, RhoPolicy};
pub use external::{
    run_external, CommandTemplate, Dataset, ExternalOptions, OovVocabulary, METRIC_OOV,
    METRIC_SENTENCE, METRIC_TOKEN,
};
pub use scores::{ScoreKey, ScoreMatrix, SCORE_HEADER};
pub use splits::{make_splits, FoldRoles, SplitPlan};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("{n_items} items cannot fill {k} folds")]
    TooFewItems { n_items: usize, k: usize },
    #[error("{what} index {index} out of range (have {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid command template: {0}")]
    InvalidTemplate(String),
    #[error("command failed (exit status {status:?}): {command}\n{diagnostics}")]
    CommandFailed {
        command: String,
        status: Option<i32>,
        diagnostics: String,
    },
    #[error("unreadable prediction file {path}: {detail}")]
    OutputUnreadable { path: String, detail: String },
    #[error("duplicate score key {0:?}")]
    DuplicateKey(Box<ScoreKey>),
    #[error("score {score} for {key:?} is outside [0, 1]")]
    ScoreOutOfRange { key: Box<ScoreKey>, score: f64 },
    #[error("systems {system_a} and {system_b} share no data set on metric {metric}")]
    NoSharedKeys {
        system_a: String,
        system_b: String,
        metric: String,
    },
    #[error("data set {dataset}: repetition {repetition}, fold {fold} is scored for only one system")]
    UnpairedKey {
        dataset: String,
        repetition: usize,
        fold: usize,
    },
    #[error("data set {dataset}: {n} paired observations, need at least 2")]
    TooFewObservations { dataset: String, n: usize },
    #[error("rho = {rho} is not admissible for n = {n}")]
    InvalidRho { rho: f64, n: usize },
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("i/o error: {0}")]
    Io(String),
}
