use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error(
        "quadrature on [{lower}, {upper}] did not converge: estimated error {abs_error:e} \
         exceeds tolerance {tolerance:e} after {subintervals} subintervals"
    )]
    Quadrature {
        lower: f64,
        upper: f64,
        abs_error: f64,
        tolerance: f64,
        subintervals: usize,
    },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("invalid sweep specification: {0}")]
    InvalidSpec(String),

    #[error("no feasible point in sweep for {0}")]
    NoFeasiblePoint(String),

    #[error("figure {figure}: {reason}")]
    FigureMismatch { figure: String, reason: String },

    #[error("malformed data set: {0}")]
    Parse(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            reason,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
