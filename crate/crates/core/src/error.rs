use thiserror::Error;

use crate::rotation::RotationEstimate;

#[derive(Debug, Error)]
pub enum Error {
    #[error("inverse iteration did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("requested {requested} iterations, cap is {cap}")]
    CapExceeded { requested: u64, cap: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    /// The Farey bracket hit the denominator cap before reaching the
    /// requested width. The enclosure it carries is still valid.
    #[error("denominator cap reached with enclosure {} ± {:e}", .0.value, .0.radius)]
    QCapExceeded(Box<RotationEstimate>),

    #[error("range error: {0}")]
    Range(String),

    #[error("comparison with target unresolvable at the denominator cap; bracket [{lo}, {hi}]")]
    Unresolvable { lo: f64, hi: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("combinatorics violation: {0}")]
    CombinatoricsViolation(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("orbit order disagrees with rotation order at knot {index}")]
    OrderMismatch { index: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
