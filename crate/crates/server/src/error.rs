use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use ran_core::{BlobError, Error};
use serde_json::json;

/// Wire form of every failure: `{"error":{"code","message"}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.to_owned(),
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "Validation", message)
    }

    pub fn unauthenticated(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "InvalidCredentials", message)
    }
}

pub fn status_of(e: &Error) -> StatusCode {
    match e {
        Error::Validation(_)
        | Error::SelectorInvalid(_)
        | Error::EmptySelection
        | Error::EmptyQuery
        | Error::WeakPassword(_) => StatusCode::BAD_REQUEST,
        Error::InvalidCredentials | Error::ExpiredToken => StatusCode::UNAUTHORIZED,
        Error::Forbidden(_) | Error::NotEligible => StatusCode::FORBIDDEN,
        Error::NotFound(_) | Error::AssetNotFound(_) | Error::NoRating => StatusCode::NOT_FOUND,
        Error::NameConflict(_)
        | Error::VersionConflict { .. }
        | Error::RootImmutable
        | Error::CopyOwnProject
        | Error::EmailTaken => StatusCode::CONFLICT,
        Error::PackageTooLarge => StatusCode::PAYLOAD_TOO_LARGE,
        Error::Blob(b) => match b {
            BlobError::TooLarge { .. } => StatusCode::PAYLOAD_TOO_LARGE,
            BlobError::NotFound(_) => StatusCode::NOT_FOUND,
            BlobError::SelectorOutOfBounds { .. }
            | BlobError::NotAnArchive
            | BlobError::MemberMissing(_) => StatusCode::BAD_REQUEST,
            BlobError::CorruptBlob(_) | BlobError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        },
        Error::BlobMissing(_) | Error::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = status_of(&e);
        if status.is_server_error() {
            tracing::error!(code = e.code(), "{e}");
        }
        Self::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}
