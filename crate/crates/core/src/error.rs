use thiserror::Error;

use crate::coupling::FixedPointStatus;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid association: {0}")]
    InvalidAssociation(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("UE {ue} receives zero signal power from its serving cells")]
    DegenerateLink { ue: usize },
    #[error("UE {ue} has zero SINR and cannot meet its demand")]
    InfeasibleDemand { ue: usize },
    #[error("fixed-point iteration stopped with {status:?} after {iterations} iterations")]
    NotConverged {
        status: FixedPointStatus,
        iterations: usize,
    },
    #[error("no linear segment for UE {ue}, option {option}")]
    MissingSegment { ue: usize, option: usize },
    #[error("linear model is infeasible")]
    Infeasible,
    #[error("malformed LP text at line {line}: {msg}")]
    LpParse { line: usize, msg: String },
    #[error("malformed DIMACS input: {0}")]
    Dimacs(String),
    #[error("enumeration of {0} associations exceeds the guard")]
    EnumerationTooLarge(u128),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
