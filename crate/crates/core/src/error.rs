use thiserror::Error;

use crate::dist::SeriesReport;
use crate::model::Complex;

pub type Result<T, E = AsepError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AsepError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// A denominator vanished. On contour nodes this means the plan is wrong.
    #[error("pole encountered: {0}")]
    Pole(String),

    #[error("no feasible contour plan: {0}")]
    InfeasiblePlan(String),

    #[error("quadrature did not converge (value {value}, est. error {est_error:.3e}, {nodes} nodes per circle)")]
    QuadratureNotConverged {
        value: Complex,
        est_error: f64,
        nodes: usize,
    },

    /// The partial report is kept so callers can still print what was computed.
    #[error("series did not converge by k = {}: last shell {:.3e}", .0.kmax_reached, .0.last_shell)]
    SeriesNotConverged(Box<SeriesReport>),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("lattice window too small: {0}")]
    WindowTooSmall(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl AsepError {
    pub fn is_non_convergence(&self) -> bool {
        matches!(
            self,
            AsepError::QuadratureNotConverged { .. } | AsepError::SeriesNotConverged(_)
        )
    }
}
