use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field} = {value}: {reason}")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("field sample {index} at x = {x} is zero; amplitude/phase split is singular")]
    ZeroSample { index: usize, x: f64 },

    #[error("|Phi| vanished at x = {x} during integration (node in the well)")]
    NodeEncountered { x: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular Newton Jacobian (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error("wave-number contrast n = {n} is not above 1; closed form needs q > k")]
    NoContrast { n: f64 },

    #[error("first-order expansion broke down: F = {f_aux} is not positive")]
    PerturbationBreakdown { f_aux: f64 },

    #[error("converged onto the wrong matching branch: {0}")]
    WrongBranch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed table: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn param(field: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            field,
            value,
            reason,
        }
    }

    /// True for failures of the iterative solvers, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::NodeEncountered { .. }
                | Error::SingularJacobian { .. }
                | Error::WrongBranch(_)
                | Error::PerturbationBreakdown { .. }
        )
    }
}
