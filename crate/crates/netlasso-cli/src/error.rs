//! Error-to-exit-code contract: 0 success, 2 usage, 3 parse, 4
//! non-convergence, 5 resource exhaustion.

use netlasso::datasets::DatasetError;
use netlasso::graph::GraphError;
use netlasso::inference::InferenceError;
use netlasso::solver::SolverError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("solver stopped at max_iter without converging")]
    NonConvergence,
    #[error("{0}")]
    Resource(String),
    #[error("{0}")]
    Other(String),
}

pub fn exit_code(err: &CliError) -> i32 {
    match err {
        CliError::Usage(_) => 2,
        CliError::Parse(_) => 3,
        CliError::NonConvergence => 4,
        CliError::Resource(_) => 5,
        CliError::Other(_) => 1,
    }
}

impl From<GraphError> for CliError {
    fn from(err: GraphError) -> Self {
        CliError::Parse(err.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(err: DatasetError) -> Self {
        match err {
            DatasetError::BadSpec(msg) => CliError::Usage(msg),
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(err: SolverError) -> Self {
        match err {
            SolverError::BadConfig(msg) => CliError::Usage(msg),
            SolverError::BadLambda(v) => CliError::Usage(format!("bad lambda {v}")),
            SolverError::Prox { .. } | SolverError::Infeasible { .. } => CliError::NonConvergence,
            SolverError::WarmStartMismatch => CliError::Other(err.to_string()),
            SolverError::Pool(msg) => CliError::Resource(msg),
        }
    }
}

impl From<InferenceError> for CliError {
    fn from(err: InferenceError) -> Self {
        CliError::Usage(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Other(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Parse(err.to_string())
    }
}
