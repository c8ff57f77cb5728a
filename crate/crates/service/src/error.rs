use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use maud_core::Error as CoreError;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Error document returned by every failing endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    /// Structured context such as admissible bounds or blocking rules.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        ApiError {
            code: code.to_string(),
            message: message.into(),
            field: None,
            details: None,
        }
    }

    pub fn not_found(kind: &str, id: &str) -> Self {
        ApiError::new("not_found", format!("no {kind} with id `{id}`"))
    }

    pub fn storage(err: std::io::Error) -> Self {
        ApiError::new("storage", format!("storage failure: {err}"))
    }

    pub fn with_field(mut self, field: impl Into<String>) -> Self {
        self.field = Some(field.into());
        self
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    pub fn status(&self) -> StatusCode {
        status_for(&self.code)
    }
}

/// HTTP status class for a machine code.
pub fn status_for(code: &str) -> StatusCode {
    match code {
        "not_found" => StatusCode::NOT_FOUND,
        "sequence" | "session_complete" | "session_incomplete" => StatusCode::CONFLICT,
        "malformed_json" => StatusCode::BAD_REQUEST,
        // coverage gaps in a validated knowledge base indicate a loader bug
        "storage" | "coverage" | "quadrature" => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

fn details(err: &CoreError) -> Option<Value> {
    Some(match err {
        CoreError::AnswerDomain { value, min, max } => {
            json!({"value": value, "min": min, "max": max})
        }
        CoreError::InfeasibleFit {
            target,
            feasible_min,
            feasible_max,
        } => json!({"target": target, "feasible_min": feasible_min, "feasible_max": feasible_max}),
        CoreError::Sequence { expected, got } => json!({"expected": expected, "got": got}),
        CoreError::SessionIncomplete { remaining } => json!({"remaining": remaining}),
        CoreError::Schema(violations) => json!({"violations": violations}),
        CoreError::InfeasibleDesign { slot, rules } => json!({"slot": slot, "rules": rules}),
        CoreError::InfeasibleConfiguration { rules } => json!({"rules": rules}),
        CoreError::ConventionalIncomplete { slots } => json!({"slots": slots}),
        CoreError::OutOfRange { min, max, .. } | CoreError::EstimateRange { min, max, .. } => {
            json!({"min": min, "max": max})
        }
        _ => return None,
    })
}

impl From<CoreError> for ApiError {
    fn from(err: CoreError) -> Self {
        ApiError {
            code: err.code().to_string(),
            message: err.to_string(),
            field: err.field(),
            details: details(&err),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}
