use axum::extract::rejection::JsonRejection;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use rental_core::store::StoreError;
use rental_core::LedgerError;
use serde::{Deserialize, Serialize};

/// JSON error body: `{"code": "...", "message": "..."}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        ApiError {
            code: code.to_owned(),
            message: message.into(),
        }
    }

    pub fn status(&self) -> StatusCode {
        status_for(&self.code)
    }
}

/// HTTP status for a machine-readable error code.
pub fn status_for(code: &str) -> StatusCode {
    match code {
        "AUTHORIZATION" | "NOT_VISIBLE" | "IMPERSONATION" | "NOT_A_VOTER" => StatusCode::FORBIDDEN,
        "NOT_FOUND" | "UNKNOWN_PARTY" | "UNKNOWN_TEMPLATE" | "UNKNOWN_CHOICE"
        | "UNKNOWN_EXTERNAL_ID" => StatusCode::NOT_FOUND,
        "CONTRACT_NOT_ACTIVE" | "STALE_EXTERNAL_ID" => StatusCode::GONE,
        "KEY_COLLISION" | "STALE_UPDATE" | "DUPLICATE_PARTY" | "TIME_OUT_OF_SKEW"
        | "INVITATION_ALREADY_ACTIVE" | "ALREADY_CONFIRMED" | "INVITATION_FULL"
        | "NOT_ENOUGH_ARBITRATORS" | "DUPLICATE_VOTE" | "VOTING_INCOMPLETE"
        | "ALREADY_RESOLVED" | "CLOCK_NOT_MANUAL" => StatusCode::CONFLICT,
        "WRONG_TEMPLATE" | "INVALID_PAYLOAD" | "PRECONDITION" | "BAD_REQUEST" => {
            StatusCode::UNPROCESSABLE_ENTITY
        }
        "STORE_TIMEOUT" => StatusCode::SERVICE_UNAVAILABLE,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<LedgerError> for ApiError {
    fn from(e: LedgerError) -> Self {
        ApiError::new(e.code(), e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let code = match e {
            StoreError::Unknown(_) => "UNKNOWN_EXTERNAL_ID",
            StoreError::Retired(_) => "STALE_EXTERNAL_ID",
            StoreError::NotInStore(_) => "NOT_FOUND",
        };
        ApiError::new(code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new("BAD_REQUEST", e.body_text())
    }
}

impl From<tokio::task::JoinError> for ApiError {
    fn from(e: tokio::task::JoinError) -> Self {
        ApiError::new("INTERNAL", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
