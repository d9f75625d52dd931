use thiserror::Error;

use crate::precoder::PrecoderSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error at line {line}: {msg}")]
    ConfigLine { line: usize, msg: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("constellation unsupported: half-angle {theta} rad leaves tan(theta) unbounded")]
    UnsupportedConstellation { theta: f64 },

    #[error("probability {eta} is outside the admissible range {range}")]
    InvalidProbability { eta: f64, range: &'static str },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("malformed program: {0}")]
    Program(String),

    #[error("backend failure at SCA iteration {iteration}: {detail}")]
    NumericalTrouble { iteration: usize, detail: String },

    #[error("problem infeasible at SCA iteration {iteration}")]
    Infeasible { iteration: usize },

    /// Rounding the relaxed selection broke feasibility; carries the relaxed solution.
    #[error("polish solve infeasible after rounding the selection vector")]
    FallbackAllOn(Box<PrecoderSolution>),

    #[error("oracle precondition violated: {0}")]
    Oracle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
