use thiserror::Error;

/// Errors raised by treeplex construction, game assembly, smoothing and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The treeplex or game tree is malformed (cycles, overlapping index ranges,
    /// perfect-recall violations, bad probabilities).
    #[error("structural error: {0}")]
    Structure(String),

    /// A caller supplied an argument of the wrong shape or outside the operation's domain.
    #[error("argument error: {0}")]
    Argument(String),

    /// A point lies on (or outside) the boundary where a derivative is undefined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The perturbation leaves some perturbed simplex empty (`n * xi >= 1`).
    #[error("infeasible perturbation: xi = {xi} with simplex size {size}")]
    InfeasiblePerturbation { xi: f64, size: usize },

    /// A solver invariant was broken; the run cannot continue.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// A run configuration named something the registry does not know.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
