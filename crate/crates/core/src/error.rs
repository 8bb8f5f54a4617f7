use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the calibration core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value is not finite: {0}")]
    NonFinite(f64),
    #[error("weight must be positive and finite, got {0}")]
    BadWeight(f64),
    #[error("record {0} has no label")]
    MissingLabel(usize),
    #[error("class has zero total weight (positives: {pos}, negatives: {neg})")]
    EmptyClass { pos: f64, neg: f64 },
    #[error("invalid ROC curve: {0}")]
    InvalidCurve(&'static str),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("local window has a single FPR value and no wider window exists")]
    DegenerateWindow,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("x values must be strictly increasing")]
    NotIncreasing,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("no negative labels")]
    ZeroNegatives,
    #[error("no positive labels")]
    ZeroPositives,
    #[error("stratum {0} is unknown to the calibrator")]
    UnknownStratum(u32),
    #[error("stratum {stratum}: {source}")]
    InStratum {
        stratum: u32,
        source: alloc::boxed::Box<Error>,
    },
    #[error("covariance is numerically zero")]
    ZeroVariance,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sign mode requires exactly 2 strata, got {0}")]
    BadMode(usize),
    #[error("stratum {0} would be empty")]
    EmptyStratum(u32),
    #[error("marginal positive rate {0} is not in (0, 1)")]
    DegeneratePrior(f64),
    #[error("brute force enumeration is capped at 8 points, got {0}")]
    TooLarge(usize),
    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(&'static str),
    #[error("a class is empty after under-sampling")]
    EmptyClassAfterSampling,
}

impl Error {
    pub(crate) fn in_stratum(self, stratum: u32) -> Self {
        Error::InStratum {
            stratum,
            source: alloc::boxed::Box::new(self),
        }
    }

    /// The innermost error, with stratum context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::InStratum { source, .. } => source.root(),
            other => other,
        }
    }
}
