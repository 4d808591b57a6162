use thiserror::Error;

use crate::table::RowId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("row {row}, column {col}: {msg}")]
    Cell { row: usize, col: usize, msg: String },

    #[error("input contains no rows")]
    EmptyInput,

    #[error("table has no cells")]
    EmptyTable,

    #[error("unknown column {0}")]
    UnknownColumn(String),

    #[error("unknown row {0}")]
    UnknownRow(RowId),

    #[error("column {0} is both antecedent and consequent")]
    ConsequentInAntecedent(String),

    #[error("rule antecedent is empty")]
    EmptyAntecedent,

    #[error("rule sets have different consequents ({0} vs {1})")]
    ConsequentMismatch(String, String),

    #[error("invalid run plan: {0}")]
    InvalidPlan(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
