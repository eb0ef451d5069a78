use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Wire form of every error: `{code, message}` plus the CSV position when
/// an upload fails to parse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("csv error at row {row}, column {column}: {message}")]
    Csv { row: usize, column: usize, message: String },
    #[error("session `{0}` not found")]
    NotFound(String),
    #[error("session `{0}` expired")]
    Gone(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Unprocessable(String),
    #[error("server is at capacity ({0} sessions); retry later")]
    Capacity(usize),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) | ApiError::Csv { .. } => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Gone(_) => StatusCode::GONE,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Capacity(_) => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ApiError::BadRequest(_) => "bad_request",
            ApiError::Csv { .. } => "bad_dataset",
            ApiError::NotFound(_) => "not_found",
            ApiError::Gone(_) => "expired",
            ApiError::Conflict(_) => "conflict",
            ApiError::Unprocessable(_) => "unprocessable",
            ApiError::Capacity(_) => "capacity",
            ApiError::Internal(_) => "internal",
        }
    }

    pub fn body(&self) -> ErrorBody {
        let (row, column) = match self {
            ApiError::Csv { row, column, .. } => (Some(*row), Some(*column)),
            _ => (None, None),
        };
        ErrorBody { code: self.code().into(), message: self.to_string(), row, column }
    }
}

/// Errors from dataset loading and config validation are the client's fault;
/// protocol errors mean the engine was asked for something out of turn.
impl From<irm_core::Error> for ApiError {
    fn from(e: irm_core::Error) -> Self {
        use irm_core::Error as E;
        match e {
            E::Csv { row, column, message } => ApiError::Csv { row, column, message },
            E::Protocol(m) => ApiError::Conflict(m),
            E::Contract(m) => ApiError::Internal(m),
            other => ApiError::BadRequest(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut res = (self.status(), Json(self.body())).into_response();
        if matches!(self, ApiError::Capacity(_)) {
            res.headers_mut().insert(header::RETRY_AFTER, HeaderValue::from_static("5"));
        }
        res
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
