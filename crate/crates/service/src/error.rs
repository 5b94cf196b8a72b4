use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use artvista_genai::GenaiError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ServiceError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    PayloadTooLarge(String),
    #[error("{0}")]
    Backend(String),
    #[error("{0}")]
    Timeout(String),
    #[error("{0}")]
    Internal(String),
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

impl ServiceError {
    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::Validation(_) => "validation",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::PayloadTooLarge(_) => "payload_too_large",
            ServiceError::Backend(_) => "backend",
            ServiceError::Timeout(_) => "timeout",
            ServiceError::Internal(_) => "internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::Validation(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::PayloadTooLarge(_) => StatusCode::PAYLOAD_TOO_LARGE,
            ServiceError::Backend(_) => StatusCode::BAD_GATEWAY,
            ServiceError::Timeout(_) => StatusCode::GATEWAY_TIMEOUT,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn body(&self) -> Vec<u8> {
        serde_json::to_vec(&serde_json::json!({
            "error": { "kind": self.kind(), "message": self.to_string() }
        }))
        .expect("json value serializes")
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            tracing::warn!(kind = self.kind(), message = %self, "request failed");
        }
        (self.status(), [("content-type", "application/json")], self.body()).into_response()
    }
}

impl From<artvista_core::Error> for ServiceError {
    fn from(e: artvista_core::Error) -> Self {
        match e {
            artvista_core::Error::Encode(_) => ServiceError::Internal(e.to_string()),
            _ => ServiceError::Validation(e.to_string()),
        }
    }
}

impl From<GenaiError> for ServiceError {
    fn from(e: GenaiError) -> Self {
        match e {
            GenaiError::InvalidArgument(_) => ServiceError::Validation(e.to_string()),
            GenaiError::Timeout(_) => ServiceError::Timeout(e.to_string()),
            GenaiError::Transport(_) | GenaiError::Backend { .. } | GenaiError::Decode(_) => {
                ServiceError::Backend(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Internal(format!("storage error: {e}"))
    }
}
