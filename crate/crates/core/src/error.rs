use thiserror::Error;

use crate::engine::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidSpec(String),

    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("infeasible transmission plan: {0}")]
    Infeasible(ValidationReport),

    #[error("vertex set is not independent: edge ({0}, {1})")]
    NotIndependent(usize, usize),

    #[error(
        "conflict graph has {vertices} vertices, above the solver ceiling of {limit} \
         (N = {n_users}, M = {n_packets}); try the netcam-wp scheduler"
    )]
    Capacity {
        vertices: usize,
        limit: usize,
        n_users: usize,
        n_packets: usize,
    },

    #[error("scheduler {scheduler} made no progress in slot {slot}")]
    NoProgress {
        scheduler: &'static str,
        slot: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(String),
}
