use thiserror::Error;

use crate::robust::RobustnessReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid QUBO: {0}")]
    InvalidQubo(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("problem has {num_vars} variables, exceeding the cap of {cap}")]
    SizeCap { num_vars: usize, cap: usize },

    #[error("no feasible assignment exists{}", match .scenario { Some(k) => format!(" for scenario {k}"), None => String::new() })]
    Infeasible { scenario: Option<usize> },

    #[error("no sampled candidate passed the feasibility filter ({} candidates rejected)", .0.candidates.len())]
    EmptyHarvest(Box<RobustnessReport>),

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
