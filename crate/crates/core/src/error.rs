use thiserror::Error;

/// Errors raised while building, validating or searching a matching problem.
#[derive(Debug, Error)]
pub enum MatchError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("infeasible subset: {0}")]
    Infeasible(String),

    #[error("statistical test undefined: {0}")]
    UndefinedTest(String),

    #[error("test registry: {0}")]
    Registry(String),

    #[error("invalid criterion {index} ({test} on `{covariate}`): {message}")]
    InvalidCriterion {
        index: usize,
        test: String,
        covariate: String,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("evaluation budget of {budget} criterion evaluations exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("linear algebra: {0}")]
    LinearAlgebra(String),
}

pub type Result<T, E = MatchError> = std::result::Result<T, E>;

impl MatchError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        MatchError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
