//! Exact holonomy algebras of superconnections on coordinate supermanifold
//! models, together with the Grassmann-algebra machinery behind them.

pub mod bilinear;
pub mod catalog;
pub mod derham;
pub mod echelon;
pub mod fppf;
pub mod geometry;
pub mod grassmann;
pub mod holonomy;
pub mod lie;
pub mod model;
pub mod points;
pub mod report;
pub mod superfn;
pub mod supermatrix;
pub mod transport;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("elements live in different generator contexts")]
    ContextMismatch,
    #[error("element is not invertible (zero body)")]
    NotInvertible,
    #[error("parity error: {0}")]
    Parity(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("T has {have} generators but {need} are required")]
    TTooSmall { need: usize, have: usize },
    #[error("operation needs exact transport but the path uses hybrid mode")]
    HybridModeUnsupported,
    #[error("line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
}
