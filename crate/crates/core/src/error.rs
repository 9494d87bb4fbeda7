use thiserror::Error;

/// Errors raised across the library. Each variant names the contract that failed.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate point set: points {first} and {second} coincide (separation distance 0)")]
    DegenerateSet { first: usize, second: usize },

    #[error("unsupported degree {degree}: the configured degree cap is {cap}")]
    UnsupportedDegree { degree: usize, cap: usize },

    #[error(
        "center set is not unisolvent: Wigner-D rows of degree <= {degree} have rank {rank}, expected {expected}"
    )]
    Unisolvency {
        degree: usize,
        rank: usize,
        expected: usize,
    },

    #[error("ill-conditioned system: condition estimate {estimate:.3e} exceeds {threshold:.1e} ({context})")]
    Conditioning {
        estimate: f64,
        threshold: f64,
        context: String,
    },

    #[error(
        "insufficient center density: {local} centers within radius {radius:.4} support only rank {rank} of {required}; increase the radius"
    )]
    Density {
        local: usize,
        rank: usize,
        required: usize,
        radius: f64,
    },

    #[error("parse error{}: {message}", record.map(|r| format!(" in record {r}")).unwrap_or_default())]
    Parse {
        record: Option<usize>,
        message: String,
    },

    #[error("validation error{}: {message}", record.map(|r| format!(" in record {r}")).unwrap_or_default())]
    Validation {
        record: Option<usize>,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
