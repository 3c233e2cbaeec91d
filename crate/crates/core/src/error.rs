use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("singular matrix in {context}: pivot {pivot:.3e} in column {column} below threshold {threshold:.3e}")]
    SingularMatrix {
        context: String,
        column: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("closed-form denominator vanishes (|d| = {d_abs:.3e}) at eta = {eta}, omega_c = {omega_c}")]
    ZeroDenominator { eta: f64, omega_c: f64, d_abs: f64 },

    #[error("harmonic truncation not converged: k = 1 rho31 changed by {rel_change:.3e} (relative) when k_max went {k_max} -> {k_doubled}")]
    TruncationNotConverged {
        k_max: usize,
        k_doubled: usize,
        rel_change: f64,
    },

    #[error("grid too coarse: refining by 2 changed ng - 1 by {rel_change:.3e} (relative) at detuning {at}")]
    GridTooCoarse { at: f64, rel_change: f64 },

    #[error("no bracket: target |y| = {target} outside sampled range [{min}, {max}]")]
    NoBracket { target: f64, min: f64, max: f64 },

    #[error("projection window too short: need [{needed_from}, {end}] but trajectory usable from {available_from}")]
    WindowTooShort {
        needed_from: f64,
        available_from: f64,
        end: f64,
    },

    #[error("step too large: halving h changed the final state by {max_change:.3e}")]
    StepTooLarge { max_change: f64 },

    #[error("no successful points: {0}")]
    NoValidPoints(String),
}
