use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the range an operation is defined on.
    #[error("invalid {name}: {reason}")]
    Domain { name: &'static str, reason: String },

    #[error("ball index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("radius of ball {ball} fell to {radius:e}, below the representable floor")]
    PrecisionExhausted { ball: usize, radius: f64 },

    #[error("no admissible center for ball {ball} within {budget} dense-sequence candidates")]
    CandidateSearchOverflow { ball: usize, budget: usize },

    #[error("operation needs at least {needed} balls, system has {found}")]
    InsufficientBalls { needed: usize, found: usize },

    #[error("no epsilon on the grid reaches |G|/|B| >= 2/3 (best estimate {best:.4})")]
    CalibrationFailed { best: f64 },

    #[error("no sample of region {region} in ball {ball} among {samples} draws")]
    RegionEmpty {
        region: &'static str,
        ball: usize,
        samples: usize,
    },

    #[error("point {index} is within the smoothness margin of a center or sphere")]
    NonSmoothPoint { index: usize },

    #[error("no ball of the requested range fits inside the subdomain")]
    EmptyScan,

    #[error("malformed ball system: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            name,
            reason: reason.into(),
        }
    }
}
