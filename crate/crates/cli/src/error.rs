use std::io;
use std::path::PathBuf;

use thiserror::Error;

use tensorlog::compiler::CompileError;
use tensorlog::datalog::TcError;
use tensorlog::evaluator::EvalError;
use tensorlog::formula::FormulaError;
use tensorlog::matkit::MatError;
use tensorlog::model::ModelError;

/// Exit status for a run that finished but whose oracle disagreed.
pub const EXIT_DISAGREE: u8 = 3;
/// Exit status for bad input: unreadable files, parse and validation errors.
pub const EXIT_INPUT: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {source}", path.display())]
    Model { path: PathBuf, source: ModelError },

    #[error(transparent)]
    Ground(#[from] ModelError),

    #[error("formula: {0}")]
    Formula(#[from] FormulaError),

    #[error("compile: {0}")]
    Compile(#[from] CompileError),

    #[error("evaluate: {0}")]
    Eval(#[from] EvalError),

    #[error("{}: {source}", path.display())]
    Matrix { path: PathBuf, source: MatError },

    #[error(transparent)]
    Mat(#[from] MatError),

    #[error("{0}")]
    Tc(#[from] TcError),

    #[error("TENSORLOG_THREADS: {0}")]
    Threads(String),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}
