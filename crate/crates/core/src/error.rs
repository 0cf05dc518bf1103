//! Error taxonomy shared by every module.
//!
//! The variants map onto the process exit codes used by the command-line
//! front end: input errors exit with 1, construction/verification-machinery
//! errors with 2.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("input error: {0}")]
    Input(String),

    /// An internal consistency check failed while building a system,
    /// labeling, or catalog. Signals a bug or an infeasible configuration.
    #[error("construction error: {0}")]
    Construction(String),

    /// A nearest-point tie was detected where a clean sublattice was
    /// required. Carries the offending point's coefficients.
    #[error("sublattice not clean: tie at lattice point {point:?}")]
    NotClean { point: Vec<i64> },

    /// A bounded enumeration exceeded its configured cap.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Decode was handed indices that no encoder output could produce.
    #[error("corrupt index data: {0}")]
    Corruption(String),

    /// The operation needs optional system data that is absent.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn construction(msg: impl Into<String>) -> Self {
        Error::Construction(msg.into())
    }

    /// Exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
