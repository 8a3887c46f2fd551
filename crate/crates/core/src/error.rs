use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate segment {index}: consecutive waypoints coincide")]
    DegenerateSegment { index: usize },
    #[error("validation error at station {index}: {message}")]
    Station { index: usize, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("resolution error: only {samples} samples (need at least {required})")]
    Resolution { samples: usize, required: usize },
    #[error(
        "target travel time {target:.3} s is outside the achievable range [{fastest:.3}, {slowest:.3}] s"
    )]
    Bracket {
        target: f64,
        fastest: f64,
        slowest: f64,
    },
    #[error("runs are not comparable: travel times differ by {difference:.3} s (limit {limit:.3} s)")]
    Comparability { difference: f64, limit: f64 },
    #[error("optimizer failed: {0}")]
    Optimizer(String),
}

pub type Result<T> = core::result::Result<T, Error>;
