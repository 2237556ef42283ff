use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong while building models or running solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("level {x} is outside the domain of {what}")]
    Domain { what: &'static str, x: f64 },

    #[error("level {x} lies beyond the last knot {last} and constant extension is disabled")]
    Extrapolation { x: f64, last: f64 },

    #[error("invalid table: {0}")]
    Table(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("rate function is not positive at level {x} (value {value})")]
    NonPositiveRate { x: f64, value: f64 },

    #[error("grids do not match: {0}")]
    GridMismatch(String),

    #[error("discounting is degenerate: G_q,1(0) = {g0} is not below one")]
    DegenerateDiscounting { g0: f64 },

    #[error("truncation level too small: G(0) still moved by {change:e} after {doublings} doublings")]
    Truncation { change: f64, doublings: usize },

    #[error("barrier {beta} is degenerate: shooting denominator {denominator:e}")]
    DegenerateBarrier { beta: f64, denominator: f64 },

    #[error("Nyström system is singular (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("ODE integration failed at x = {x}: {reason}")]
    Integration { x: f64, reason: String },

    #[error("no crossing of gamma = 1 found on (0, {beta_max}]")]
    ExistenceNotEstablished {
        beta_max: f64,
        curve: Vec<(f64, f64)>,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
