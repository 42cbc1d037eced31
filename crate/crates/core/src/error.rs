use thiserror::Error;

use crate::shift::Word;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid transition matrix: {0}")]
    InvalidMatrix(String),

    #[error("transition matrix is not aperiodic: {0}")]
    NotAperiodic(String),

    #[error("enumeration of {requested} words exceeds the cap of {cap}")]
    EnumerationCap { requested: u128, cap: u128 },

    #[error("word {word} has length {got}, at least {needed} symbols are required")]
    WordTooShort {
        word: Word,
        needed: usize,
        got: usize,
    },

    #[error("word {0} is not admissible")]
    NotAdmissible(Word),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("expected a potential of order {expected}, got order {got}")]
    Order { expected: usize, got: usize },

    #[error("expected a {expected}x{expected} transition matrix, got {got}x{got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid matrix entries: {0}")]
    InvalidEntries(String),

    #[error(
        "power iteration did not converge after {iterations} products (residual {residual:e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("no row deletion gives an invertible eigenvector system")]
    SingularSystem,

    #[error("row {row} sums to {sum}, expected 1")]
    NotStochastic { row: usize, sum: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("root solve for alpha = {alpha} failed: {detail}")]
    SolverFailure { alpha: f64, detail: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
