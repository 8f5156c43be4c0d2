use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

/// An error response: `{"error": ..., "current_revision": ...}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub current_revision: Option<u64>,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl ToString) -> Self {
        ApiError { status, message: message.to_string(), current_revision: None }
    }

    pub fn not_found(message: impl ToString) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    pub fn bad_request(message: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn unprocessable(message: impl ToString) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    pub fn internal(message: impl ToString) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }

    pub fn conflict(current: u64, seen: u64) -> Self {
        ApiError {
            status: StatusCode::CONFLICT,
            message: format!("stale revision {}; current revision is {}", seen, current),
            current_revision: Some(current),
        }
    }

    pub fn budget(seconds: f64) -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, format!("request exceeded the {}s budget", seconds))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(r) = self.current_revision {
            body["current_revision"] = r.into();
        }
        (self.status, Json(body)).into_response()
    }
}
