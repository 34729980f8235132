//! Error taxonomy of the API: caller mistakes and contract reverts map to 4xx
//! with a machine-readable code, engine invariant violations map to 5xx.

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use dab_core::engine::EngineError;
use dab_core::ledger::Receipt;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("transaction reverted: {reason}")]
    Reverted { code: String, reason: String, receipt: Box<Receipt> },
    #[error("request carries no x-session-id header")]
    NoSession,
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("sequence {requested} is older than the oldest buffered event {oldest}")]
    SequenceTooOld { requested: u64, oldest: u64 },
    #[error("sequence {requested} is ahead of the stream (next is {next})")]
    FutureSequence { requested: u64, next: u64 },
}

impl ApiError {
    pub fn code(&self) -> &str {
        match self {
            ApiError::Engine(e) => e.code(),
            ApiError::Reverted { code, .. } => code,
            ApiError::NoSession => "NoSession",
            ApiError::UnknownSession(_) => "UnknownSession",
            ApiError::BadRequest(_) => "BadRequest",
            ApiError::NotFound(_) => "NotFound",
            ApiError::SequenceTooOld { .. } => "SequenceTooOld",
            ApiError::FutureSequence { .. } => "FutureSequence",
        }
    }

    pub fn status(&self) -> StatusCode {
        if let ApiError::Engine(e) = self {
            if !e.is_client_error() {
                return StatusCode::INTERNAL_SERVER_ERROR;
            }
        }
        status_for_code(self.code())
    }
}

/// HTTP status for a machine-readable error code.
pub fn status_for_code(code: &str) -> StatusCode {
    match code {
        "NoSession" | "UnknownSession" => StatusCode::UNAUTHORIZED,
        "NotMember" | "Unauthorized" | "WrongSigner" | "NotBookingOwner" => StatusCode::FORBIDDEN,
        "NotFound" | "UnknownProposal" | "UnknownBooking" | "UnknownPending" | "UnknownAccount" => StatusCode::NOT_FOUND,
        "SlotTaken" | "AlreadyVoted" | "AlreadySubmitted" | "AlreadyMember" | "DuplicateProposal" | "NotActive"
        | "NotSucceeded" | "NotQueued" | "TimelockNotElapsed" | "Expired" => StatusCode::CONFLICT,
        "SequenceTooOld" => StatusCode::GONE,
        "InvariantViolated" => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": { "code": self.code(), "message": self.to_string() } });
        if let ApiError::Reverted { receipt, .. } = &self {
            body["receipt"] = serde_json::to_value(receipt).unwrap_or_default();
        }
        (self.status(), Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}
