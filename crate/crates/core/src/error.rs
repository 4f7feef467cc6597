use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension {k} outside supported range 1..={max}")]
    DimensionOutOfRange { k: u32, max: u32 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: u32, right: u32 },

    #[error("degree q={q} must satisfy 0 <= q <= k={k}")]
    DegreeOutOfRange { k: u32, q: u32 },

    #[error("level {level} outside 0..={k}")]
    LevelOutOfRange { k: u32, level: u32 },

    #[error("empty level set specification")]
    EmptyLevels,

    #[error("empty point set")]
    EmptyPoints,

    #[error("empty sample")]
    EmptySample,

    #[error("invalid vertex string {0:?}")]
    BadVertex(String),

    #[error("invalid subcube pattern {0:?}")]
    BadSubcube(String),

    #[error("ragged matrix: row {row} has {found} columns, expected {expected}")]
    RaggedMatrix { row: usize, found: usize, expected: usize },

    #[error("constraint width {found} does not match variable count {expected}")]
    LpWidth { found: usize, expected: usize },

    #[error("mixed (k, q) among subcube coefficients")]
    MixedSubcubes,

    #[error("degenerate segment: endpoints coincide")]
    DegenerateSegment,

    #[error("unknown construction {0:?}")]
    UnknownConstruction(String),

    #[error("construction {name} is not defined for k={k}, q={q}")]
    IncompatibleConstruction { name: String, k: u32, q: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
