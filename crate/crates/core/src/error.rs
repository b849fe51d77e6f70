use thiserror::Error;

use crate::config::DiskId;

/// Why two configurations fail to be EREW-adjacent.
///
/// `moved` is the disk that changed posts; `blocker` is a strictly smaller
/// disk sitting on its source post (before the step) or its destination post
/// (after the step).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjacencyViolation {
    SourceCovered { moved: DiskId, blocker: DiskId },
    DestinationCovered { moved: DiskId, blocker: DiskId },
}

impl std::fmt::Display for AdjacencyViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AdjacencyViolation::SourceCovered { moved, blocker } => {
                write!(
                    f,
                    "disk {moved} leaves a post still holding smaller disk {blocker}"
                )
            }
            AdjacencyViolation::DestinationCovered { moved, blocker } => {
                write!(
                    f,
                    "disk {moved} lands on a post holding smaller disk {blocker}"
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HanoiError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("post {post} out of range for {posts} posts")]
    PostOutOfRange { post: usize, posts: usize },
    /// Two equal-sized disks on one post. Column and colors are 1-based.
    #[error("column {column}: colors {first} and {second} share a post")]
    ColumnCollision {
        column: usize,
        first: usize,
        second: usize,
    },
    #[error("configurations use different parameters")]
    ParamsMismatch,
    #[error("not adjacent: {0}")]
    NotAdjacent(AdjacencyViolation),
    #[error("sequence step {step} is invalid: {violation}")]
    InvalidSequence {
        step: usize,
        violation: AdjacencyViolation,
    },
    #[error("empty configuration sequence")]
    EmptySequence,
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("grading {grading:?} out of range for {disks} disks")]
    GradingOutOfRange { grading: Vec<usize>, disks: usize },
    #[error("a uniform grading is required, found {0:?}")]
    NonUniformGrading(Vec<usize>),
    #[error("sequence is not contained in a single cluster of grading {level}")]
    NotContained { level: usize },
    #[error("configuration is not a member of the cluster")]
    NotMember,
    #[error("state count {states} exceeds vertex cap {cap}")]
    CapExceeded { states: u128, cap: u64 },
    #[error("invalid learning configuration: {0}")]
    InvalidConfig(String),
    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),
}

impl HanoiError {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            HanoiError::InvalidParams(_) => "InvalidParams",
            HanoiError::DimensionMismatch { .. } => "DimensionMismatch",
            HanoiError::PostOutOfRange { .. } => "PostOutOfRange",
            HanoiError::ColumnCollision { .. } => "ColumnCollision",
            HanoiError::ParamsMismatch => "ParamsMismatch",
            HanoiError::NotAdjacent(_) => "NotAdjacent",
            HanoiError::InvalidSequence { .. } => "InvalidSequence",
            HanoiError::EmptySequence => "EmptySequence",
            HanoiError::Parse { .. } => "ParseError",
            HanoiError::GradingOutOfRange { .. } => "GradingOutOfRange",
            HanoiError::NonUniformGrading(_) => "NonUniformGrading",
            HanoiError::NotContained { .. } => "NotContained",
            HanoiError::NotMember => "NotMember",
            HanoiError::CapExceeded { .. } => "CapExceeded",
            HanoiError::InvalidConfig(_) => "InvalidConfig",
            HanoiError::InternalInvariantViolation(_) => "InternalInvariantViolation",
        }
    }
}

pub type Result<T, E = HanoiError> = std::result::Result<T, E>;
