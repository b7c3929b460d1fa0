use crate::archive::ArchiveError;
use crate::blob::BlobError;
use crate::domain::{AssetId, NameError, TagError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors surfaced by registry operations. [`Error::code`] yields the stable
/// machine-readable name used on the wire.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error("forbidden: {0}")]
    Forbidden(String),
    #[error("name {0:?} is already in use")]
    NameConflict(String),
    #[error("version conflict: expected {expected}, current is {current}")]
    VersionConflict { expected: u64, current: u64 },
    #[error("root folders cannot be renamed or deleted")]
    RootImmutable,
    #[error("asset {0} not found")]
    AssetNotFound(AssetId),
    #[error("invalid selector: {0}")]
    SelectorInvalid(String),
    #[error("a project cannot be copied by its owner")]
    CopyOwnProject,
    #[error("selection is empty")]
    EmptySelection,
    #[error("query contains no searchable terms")]
    EmptyQuery,
    #[error("rating requires a full copy of the project")]
    NotEligible,
    #[error("no rating to clear")]
    NoRating,
    #[error("email address is already registered")]
    EmailTaken,
    #[error("password must be at least {0} characters")]
    WeakPassword(usize),
    #[error("invalid credentials")]
    InvalidCredentials,
    #[error("session has expired")]
    ExpiredToken,
    #[error("package exceeds zip format limits")]
    PackageTooLarge,
    #[error("blob for asset {0} is missing from storage")]
    BlobMissing(AssetId),
    #[error(transparent)]
    Blob(#[from] BlobError),
    #[error("storage failure: {0}")]
    Storage(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Validation(_) => "Validation",
            Error::NotFound(_) => "NotFound",
            Error::Forbidden(_) => "Forbidden",
            Error::NameConflict(_) => "NameConflict",
            Error::VersionConflict { .. } => "VersionConflict",
            Error::RootImmutable => "RootImmutable",
            Error::AssetNotFound(_) => "AssetNotFound",
            Error::SelectorInvalid(_) => "SelectorInvalid",
            Error::CopyOwnProject => "CopyOwnProject",
            Error::EmptySelection => "EmptySelection",
            Error::EmptyQuery => "EmptyQuery",
            Error::NotEligible => "NotEligible",
            Error::NoRating => "NoRating",
            Error::EmailTaken => "EmailTaken",
            Error::WeakPassword(_) => "WeakPassword",
            Error::InvalidCredentials => "InvalidCredentials",
            Error::ExpiredToken => "ExpiredToken",
            Error::PackageTooLarge => "PackageTooLarge",
            Error::BlobMissing(_) => "BlobMissing",
            Error::Blob(e) => e.code(),
            Error::Storage(_) => "StorageFailure",
        }
    }

    pub(crate) fn not_found(what: impl std::fmt::Display) -> Self {
        Error::NotFound(what.to_string())
    }
}

impl From<TagError> for Error {
    fn from(e: TagError) -> Self {
        Error::Validation(e.to_string())
    }
}

impl From<NameError> for Error {
    fn from(e: NameError) -> Self {
        Error::Validation(e.to_string())
    }
}

impl From<ArchiveError> for Error {
    fn from(e: ArchiveError) -> Self {
        match e {
            ArchiveError::TooLarge => Error::PackageTooLarge,
            ArchiveError::Io(io) => Error::Storage(io.to_string()),
            other => Error::Storage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Storage(e.to_string())
    }
}
