use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use kinesim_core::session::SessionError;
use serde_json::json;

/// Transport-level failure with a machine-readable code.
#[derive(Debug, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_body", message)
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session '{id}'"))
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let (status, code) = match &e {
            SessionError::WrongMode { .. } => (StatusCode::CONFLICT, "wrong_mode"),
            SessionError::IllegalTransition { .. } => (StatusCode::CONFLICT, "illegal_transition"),
            SessionError::NoSolutions => (StatusCode::CONFLICT, "no_solutions"),
            SessionError::JointIndex { .. } => (StatusCode::BAD_REQUEST, "joint_index"),
            SessionError::NonFinite => (StatusCode::BAD_REQUEST, "non_finite"),
            SessionError::UnknownBranch(_) => (StatusCode::BAD_REQUEST, "unknown_branch"),
            SessionError::InfeasibleBranch(_) => (StatusCode::BAD_REQUEST, "infeasible_branch"),
            SessionError::Ik(_) => (StatusCode::BAD_REQUEST, "ik_error"),
            SessionError::Fk(_) => (StatusCode::BAD_REQUEST, "invalid_matrices"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}
