use std::path::PathBuf;

/// Format and validation failures for every session input file.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: malformed document: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("{path}:{line}: bad record: {reason}")]
    BadRecord { path: PathBuf, line: usize, reason: String },
    #[error("missing required field `{key}`")]
    MissingField { key: String },
    #[error("wearer `{wearer_id}` declared more than once")]
    DuplicateWearer { wearer_id: String },
    #[error("bad category map entry `{key}`: {reason}")]
    BadCategoryMap { key: String, reason: String },
    #[error("leader `{leader_id}`: {reason}")]
    UnknownLeader { leader_id: String, reason: String },
    #[error("file `{path}` referenced more than once")]
    DuplicatePath { path: PathBuf },
    #[error("bad stream metadata for `{wearer_id}`: {reason}")]
    BadStreamMeta { wearer_id: String, reason: String },
    #[error("{path}:{line}: timestamps not strictly increasing")]
    NonMonotonicTimestamps { path: PathBuf, line: usize },
    #[error("{path}: stream has no records")]
    EmptyStream { path: PathBuf },
    #[error("{path}:{line}: row {row} run lengths sum to {got}, short of width {width}")]
    RleUnderflow { path: PathBuf, line: usize, row: usize, got: u64, width: u32 },
    #[error("{path}:{line}: row {row} run lengths sum to {got}, beyond width {width}")]
    RleOverflow { path: PathBuf, line: usize, row: usize, got: u64, width: u32 },
    #[error("{path}:{line}: expected {expected} rows, found {got}")]
    RowCount { path: PathBuf, line: usize, expected: u32, got: usize },
    #[error("{path}:{line}: object id {object_id} is not in the category map")]
    UnknownObjectId { path: PathBuf, line: usize, object_id: u32 },
    #[error("{path}:{line}: degenerate box")]
    DegenerateBox { path: PathBuf, line: usize },
    #[error("{path}:{line}: more than one face box for `{person_id}`")]
    DuplicateFace { path: PathBuf, line: usize, person_id: String },
    #[error("bad label priority: {reason}")]
    BadPriority { reason: String },
}

impl IngestError {
    /// Stable variant name, printed by validators.
    pub fn name(&self) -> &'static str {
        match self {
            IngestError::Io { .. } => "Io",
            IngestError::Malformed { .. } => "Malformed",
            IngestError::BadRecord { .. } => "BadRecord",
            IngestError::MissingField { .. } => "MissingField",
            IngestError::DuplicateWearer { .. } => "DuplicateWearer",
            IngestError::BadCategoryMap { .. } => "BadCategoryMap",
            IngestError::UnknownLeader { .. } => "UnknownLeader",
            IngestError::DuplicatePath { .. } => "DuplicatePath",
            IngestError::BadStreamMeta { .. } => "BadStreamMeta",
            IngestError::NonMonotonicTimestamps { .. } => "NonMonotonicTimestamps",
            IngestError::EmptyStream { .. } => "EmptyStream",
            IngestError::RleUnderflow { .. } => "RleUnderflow",
            IngestError::RleOverflow { .. } => "RleOverflow",
            IngestError::RowCount { .. } => "RowCount",
            IngestError::UnknownObjectId { .. } => "UnknownObjectId",
            IngestError::DegenerateBox { .. } => "DegenerateBox",
            IngestError::DuplicateFace { .. } => "DuplicateFace",
            IngestError::BadPriority { .. } => "BadPriority",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        IngestError::Io { path: path.into(), message: err.to_string() }
    }
}
