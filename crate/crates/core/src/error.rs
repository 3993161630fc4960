use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("value {value} outside interpolation range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parse error: {message}")]
    Parse { message: String, lines: Vec<usize> },

    #[error("column detection failed: {0}")]
    Detection(String),

    #[error("mu computation failed: {0}")]
    Compute(String),

    #[error("dead monitor: {fraction:.1}% of I0 values are not positive")]
    DeadMonitor { fraction: f64 },

    #[error("merge failed: {0}")]
    Merge(String),

    #[error("XDI format error: {0}")]
    Format(String),

    #[error("need at least {needed} points, got {got}")]
    Size { needed: usize, got: usize },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("no edge found")]
    NoEdge,

    #[error("inverted edge: edge step {0} is not positive")]
    InvertedEdge(f64),

    #[error("chi spectrum already carries k-weight {0}")]
    AlreadyWeighted(u8),
}

impl Error {
    /// Stable snake_case name of the variant, for structured error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::OutOfRange { .. } => "out_of_range",
            Error::InvalidParams(_) => "invalid_params",
            Error::Parse { .. } => "parse",
            Error::Detection(_) => "detection",
            Error::Compute(_) => "compute",
            Error::DeadMonitor { .. } => "dead_monitor",
            Error::Merge(_) => "merge",
            Error::Format(_) => "format",
            Error::Size { .. } => "size",
            Error::Fit(_) => "fit",
            Error::NoEdge => "no_edge",
            Error::InvertedEdge(_) => "inverted_edge",
            Error::AlreadyWeighted(_) => "already_weighted",
        }
    }

    pub(crate) fn params(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }
}
