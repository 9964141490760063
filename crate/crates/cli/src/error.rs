use std::process::ExitCode;

use tagrank::baselines::BaselineError;
use tagrank::corpus::CorpusError;
use tagrank::eval::EvalError;
use tagrank::index::IndexError;
use tagrank::matrix::MatrixError;
use tagrank::ranker::RankError;
use thiserror::Error;

/// Failure classes, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Data(_) => 4,
            CliError::Numeric(_) => 5,
        })
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io(e) => e.into(),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<MatrixError> for CliError {
    fn from(e: MatrixError) -> Self {
        match e {
            MatrixError::InvalidSmoothing(_) | MatrixError::UnknownVariant(_) => {
                CliError::Config(e.to_string())
            }
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Io(e) => e.into(),
            IndexError::MissingVariant(_) => CliError::Config(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<RankError> for CliError {
    fn from(e: RankError) -> Self {
        match e {
            RankError::NonFinite(_) => CliError::Numeric(e.to_string()),
            RankError::InvalidConfig(_) | RankError::ZeroCount => CliError::Config(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        match e {
            BaselineError::ZeroNeighbors | BaselineError::InvalidLambda(_) => {
                CliError::Config(e.to_string())
            }
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Io(e) => e.into(),
            e => CliError::Data(e.to_string()),
        }
    }
}
