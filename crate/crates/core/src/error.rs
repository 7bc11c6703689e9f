use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("question score {0} is outside 0..=5")]
    InvalidQuestionScore(i64),
    #[error("{kind} evaluation has {count} questions, expected {expected}")]
    QuestionCount {
        kind: &'static str,
        count: usize,
        expected: &'static str,
    },
    #[error("all questions are not applicable; the call cannot be scored")]
    AllQuestionsNotApplicable,
    #[error("no calls supplied")]
    NoCalls,
    #[error("calls mix customer-service and business-need evaluations")]
    MixedEvaluationKinds,
    #[error("score {0} is outside [1, 5]")]
    ScoreOutOfRange(f64),

    #[error("malformed row {row}, column `{column}`: {reason}")]
    MalformedRow {
        row: usize,
        column: String,
        reason: String,
    },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("bad split ratios {0:?}: must be non-negative and sum to 1")]
    BadRatios(Vec<f64>),

    #[error("infeasible class proportions: {0}")]
    InfeasibleProportions(String),
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),

    #[error("invalid hyperparameter `{name}`: {reason}")]
    InvalidHyperparameter { name: &'static str, reason: String },
    #[error("training set needs {0}")]
    InsufficientData(String),
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("operation requires a {expected} model, got {actual}")]
    WrongModelKind {
        expected: &'static str,
        actual: &'static str,
    },
    #[error("input has {actual} features, model expects {expected}")]
    ArityMismatch { expected: usize, actual: usize },
    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("evaluation set is empty")]
    EmptyEvaluationSet,
    #[error("bad fold count {k} for {n} records")]
    BadFoldCount { k: usize, n: usize },
    #[error("evaluation matrix is incomplete: {0}")]
    IncompleteMatrix(String),

    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Data errors are problems with user-supplied input rather than the program.
    /// Errors caused by how the tool was invoked or configured.
    pub fn is_usage_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::Config(_)
                | Error::InvalidHyperparameter { .. }
                | Error::BadRatios(_)
                | Error::InfeasibleProportions(_)
        )
    }

    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidQuestionScore(_)
                | Error::QuestionCount { .. }
                | Error::AllQuestionsNotApplicable
                | Error::NoCalls
                | Error::MixedEvaluationKinds
                | Error::ScoreOutOfRange(_)
                | Error::MalformedRow { .. }
                | Error::SchemaMismatch(_)
                | Error::EmptyDataset
                | Error::InsufficientData(_)
                | Error::EmptyEvaluationSet
                | Error::BadFoldCount { .. }
                | Error::Csv(_)
                | Error::Io { .. }
                | Error::ModelFormat(_)
        )
    }
}
