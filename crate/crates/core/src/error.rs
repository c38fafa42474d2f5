use thiserror::Error;

/// Errors produced by the model, simulator and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomError {
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("invalid beam splitter: {0}")]
    InvalidBeamSplitter(String),
    #[error("invalid detector: {0}")]
    InvalidDetector(String),
    #[error("invalid polarization state: {0}")]
    InvalidPolarization(String),
    #[error("invalid after-pulse parameters: {0}")]
    InvalidAfterpulse(String),
    #[error("invalid gating configuration: {0}")]
    InvalidGating(String),
    #[error("invalid histogram: {0}")]
    InvalidHistogram(String),
    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),
    #[error("V_pi must be positive, got {0}")]
    InvalidVpi(f64),
    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(&'static str),
    #[error("inconsistent probabilities: {0}")]
    InconsistentProbabilities(String),
    #[error("detection rate too high: rate * dead_time = {0} >= 1")]
    RateTooHigh(f64),
    #[error("after-pulse fit diverged: {0}")]
    FitDiverged(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("parse error at line {line} (byte offset {offset}): {reason}")]
    ParseError {
        line: usize,
        offset: usize,
        reason: String,
    },
    #[error("no coinciding gates in stream")]
    NoGates,
}

impl HomError {
    /// Variant name, printed by the CLI on its diagnostic stream.
    pub fn name(&self) -> &'static str {
        match self {
            HomError::InvalidSource(_) => "InvalidSource",
            HomError::InvalidBeamSplitter(_) => "InvalidBeamSplitter",
            HomError::InvalidDetector(_) => "InvalidDetector",
            HomError::InvalidPolarization(_) => "InvalidPolarization",
            HomError::InvalidAfterpulse(_) => "InvalidAfterpulse",
            HomError::InvalidGating(_) => "InvalidGating",
            HomError::InvalidHistogram(_) => "InvalidHistogram",
            HomError::InvalidSimConfig(_) => "InvalidSimConfig",
            HomError::InvalidVpi(_) => "InvalidVpi",
            HomError::DegenerateDenominator(_) => "DegenerateDenominator",
            HomError::InconsistentProbabilities(_) => "InconsistentProbabilities",
            HomError::RateTooHigh(_) => "RateTooHigh",
            HomError::FitDiverged(_) => "FitDiverged",
            HomError::InsufficientData(_) => "InsufficientData",
            HomError::ParseError { .. } => "ParseError",
            HomError::NoGates => "NoGates",
        }
    }

    /// True for errors raised while validating inputs (as opposed to
    /// failures of a computation on valid inputs).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            HomError::InvalidSource(_)
                | HomError::InvalidBeamSplitter(_)
                | HomError::InvalidDetector(_)
                | HomError::InvalidPolarization(_)
                | HomError::InvalidAfterpulse(_)
                | HomError::InvalidGating(_)
                | HomError::InvalidSimConfig(_)
                | HomError::InvalidVpi(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, HomError>;
