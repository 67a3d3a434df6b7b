use alloc::string::String;
use core::fmt;

/// Errors raised by the network model, solvers, and screening engine.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector argument does not match the network dimension.
    Dimension { expected: usize, got: usize },
    /// An argument is outside the mathematical domain of the operation.
    Domain(String),
    /// The network graph is disconnected or a referenced bus does not exist.
    Topology(String),
    /// An iterative solve did not converge within its iteration budget.
    Convergence { iterations: usize },
    /// Time integration produced a non-finite state.
    Divergence { time: f64 },
    /// Post-fault phase reconstruction has no solution.
    Reconstruction(String),
    /// The simplex solver cycled or lost numerical integrity.
    Numerical(String),
    /// A linear-program model is malformed.
    Model(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Topology(msg) => write!(f, "topology error: {msg}"),
            Error::Convergence { iterations } => {
                write!(f, "no convergence after {iterations} iterations")
            }
            Error::Divergence { time } => {
                write!(f, "state diverged at t = {time:.6} s")
            }
            Error::Reconstruction(msg) => write!(f, "reconstruction error: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical error: {msg}"),
            Error::Model(msg) => write!(f, "model error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
