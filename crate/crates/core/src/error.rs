use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("boundary condition order must be 0, 1, 2 or 3 (got {0})")]
    InvalidBc(i64),

    #[error("t = {t} lies outside the grid domain [{lo}, {hi}]")]
    Domain { t: f64, lo: f64, hi: f64 },

    #[error("derivative order {0} is not available")]
    DerivativeOrder(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),

    #[error("invalid history datum: {0}")]
    InvalidHistory(String),

    #[error("right-hand side returned {value} at t = {t} (must be finite and nonnegative)")]
    RhsViolation { t: f64, value: f64 },

    #[error("boundary functional returned {0} (must be finite and nonnegative)")]
    FunctionalViolation(f64),

    #[error("unknown preset `{name}`; available presets: {available}")]
    UnknownPreset { name: String, available: String },

    #[error("invalid parameter for preset `{preset}`: {message}")]
    InvalidParam { preset: String, message: String },

    #[error("operator vanished at iteration {iteration}; no pair on this radius")]
    DegenerateOperator { iteration: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e}, last change {change:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        change: f64,
    },

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
}
