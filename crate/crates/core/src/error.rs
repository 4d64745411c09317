use thiserror::Error;

use crate::channel::Tier;

/// Errors raised by the analytical engine and the simulator.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// The adaptive integrator ran out of subdivisions before meeting its tolerance.
    /// `level` is 0 for the outermost integral of a nested evaluation.
    #[error(
        "integral failed to converge at nesting level {level}: error estimate {estimate:.3e} \
         exceeds tolerance {tolerance:.3e} after {subdivisions} subdivisions"
    )]
    NonConvergence {
        level: usize,
        estimate: f64,
        tolerance: f64,
        subdivisions: usize,
    },

    #[error("argument outside the domain of {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    /// The half-angle construction is undefined when the receiver sits at the disk center.
    #[error("receiver at the region center has no arc half-angle; use the symmetric path")]
    DegenerateCenter,

    #[error("association probability of the {0} tier underflows; its serving-distance law is undefined")]
    ZeroAssociation(Tier),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }

    /// Shift the nesting level of a convergence failure by `by` levels.
    pub(crate) fn nested(self, by: usize) -> Self {
        match self {
            Error::NonConvergence {
                level,
                estimate,
                tolerance,
                subdivisions,
            } => Error::NonConvergence {
                level: level + by,
                estimate,
                tolerance,
                subdivisions,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
