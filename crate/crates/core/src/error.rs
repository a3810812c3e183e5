use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure an operator, parser or the persistence layer can report.
///
/// Variant names double as the stable error identifiers printed by the CLI,
/// see [`Error::name`].
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("no asset or feature at `{0}`")]
    NotFound(String),
    #[error("a {child} cannot be contained in a {parent}")]
    NotContainable { child: String, parent: String },
    #[error("`{name}` already exists under `{parent}`")]
    DuplicateName { name: String, parent: String },
    #[error("the root asset cannot be cloned")]
    CannotCloneRoot,
    #[error("`{ancestor}` is not a proper ancestor of `{asset}`")]
    NotAnAncestor { asset: String, ancestor: String },
    #[error("no feature model in scope of `{0}`")]
    NoFeatureModelInScope(String),
    #[error("the root cannot be removed")]
    CannotRemoveRoot,
    #[error("the UNASSIGNED feature cannot be removed")]
    CannotRemoveUnassigned,
    #[error("`{0}` already owns a feature model")]
    FeatureModelAlreadyPresent(String),
    #[error("feature `{0}` already exists in the target feature model")]
    DuplicateFeatureName(String),
    #[error("`{source_path}` and `{target}` are not linked by a clone trace")]
    NoTrace { source_path: String, target: String },
    #[error("features `{source_path}` and `{target}` are not clones of each other")]
    NotAClone { source_path: String, target: String },
    #[error("an entity cannot be traced to itself")]
    SelfTrace,
    #[error("`{target}` lies inside `{source_path}`")]
    Cycle { source_path: String, target: String },
    #[error("invalid name `{0}`")]
    InvalidName(String),

    #[error("line {line}: bad indentation")]
    BadIndent { line: usize },
    #[error("line {line}: misplaced group keyword `{keyword}`")]
    MisplacedGroupKeyword { line: usize, keyword: String },
    #[error("line {line}: malformed entry: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("document is empty")]
    EmptyDocument,
    #[error("line {line}: annotation `{features}` is not balanced")]
    UnbalancedAnnotation { line: usize, features: String },
    #[error("line {line}: `&end[{found}]` does not match open `&begin[{expected}]`")]
    MismatchedEnd { line: usize, expected: String, found: String },
    #[error("line {line}: `&end[{found}]` closes an annotation that encloses the still open `&begin[{inner}]`")]
    OverlapWithoutNesting { line: usize, found: String, inner: String },
    #[error("presence condition `{text}`: {reason}")]
    BadPresenceCondition { text: String, reason: String },
    #[error("mapping names unknown file `{0}`")]
    UnknownFile(String),

    #[error("{path}: {reason}")]
    IoFailure { path: PathBuf, reason: String },
    #[error("corrupt workspace state: {0}")]
    CorruptState(String),
    #[error("workspace is locked by another writer ({0})")]
    LockHeld(PathBuf),
    #[error("no workspace found (looked for `.vp/` in {0} and its ancestors)")]
    NoWorkspace(PathBuf),
    #[error("a workspace already exists at {0}")]
    AlreadyInitialized(PathBuf),

    #[error("clone log entry {entry}: {reason}")]
    BadCloneLogEntry { entry: String, reason: String },
    #[error("history step {index}: {source}")]
    ReplayStep { index: u64, source: Box<Error> },

    #[error("no feature-oriented operator invocations; break-even is undefined")]
    NoFeatureOps,
}

impl Error {
    /// Stable identifier of the error case.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotFound(_) => "NotFound",
            Error::NotContainable { .. } => "NotContainable",
            Error::DuplicateName { .. } => "DuplicateName",
            Error::CannotCloneRoot => "CannotCloneRoot",
            Error::NotAnAncestor { .. } => "NotAnAncestor",
            Error::NoFeatureModelInScope(_) => "NoFeatureModelInScope",
            Error::CannotRemoveRoot => "CannotRemoveRoot",
            Error::CannotRemoveUnassigned => "CannotRemoveUnassigned",
            Error::FeatureModelAlreadyPresent(_) => "FeatureModelAlreadyPresent",
            Error::DuplicateFeatureName(_) => "DuplicateFeatureName",
            Error::NoTrace { .. } => "NoTrace",
            Error::NotAClone { .. } => "NotAClone",
            Error::SelfTrace => "SelfTrace",
            Error::Cycle { .. } => "Cycle",
            Error::InvalidName(_) => "InvalidName",
            Error::BadIndent { .. } => "BadIndent",
            Error::MisplacedGroupKeyword { .. } => "MisplacedGroupKeyword",
            Error::Malformed { .. } => "Malformed",
            Error::EmptyDocument => "EmptyDocument",
            Error::UnbalancedAnnotation { .. } => "UnbalancedAnnotation",
            Error::MismatchedEnd { .. } => "MismatchedEnd",
            Error::OverlapWithoutNesting { .. } => "OverlapWithoutNesting",
            Error::BadPresenceCondition { .. } => "BadPresenceCondition",
            Error::UnknownFile(_) => "UnknownFile",
            Error::IoFailure { .. } => "IoFailure",
            Error::CorruptState(_) => "CorruptState",
            Error::LockHeld(_) => "LockHeld",
            Error::NoWorkspace(_) => "NoWorkspace",
            Error::AlreadyInitialized(_) => "AlreadyInitialized",
            Error::BadCloneLogEntry { .. } => "BadCloneLogEntry",
            Error::ReplayStep { source, .. } => source.name(),
            Error::NoFeatureOps => "NoFeatureOps",
        }
    }

    pub fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            reason: err.to_string(),
        }
    }
}
