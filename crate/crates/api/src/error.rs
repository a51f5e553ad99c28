use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use choreo_core::parser::SourceSpan;
use choreo_core::session::SessionError;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ParseProblem {
    pub message: String,
    pub span: SourceSpan,
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    Conflict(String),
    Unprocessable(Vec<ParseProblem>),
    Internal(String),
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Syntax(s) => {
                ApiError::Unprocessable(vec![ParseProblem { message: s.message, span: s.span }])
            }
            SessionError::IllFormed(_) | SessionError::BadSnapshot(_) => {
                ApiError::Unprocessable(vec![ParseProblem { message: e.to_string(), span: SourceSpan::default() }])
            }
            SessionError::UnknownViolation(_) | SessionError::UnknownChoice(_) => ApiError::NotFound(e.to_string()),
            SessionError::StaleChoice(_) | SessionError::EmptyHistory => ApiError::Conflict(e.to_string()),
            SessionError::Solver(_) => ApiError::Internal(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, serde_json::json!({ "error": m })),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, serde_json::json!({ "error": m })),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, serde_json::json!({ "error": m })),
            ApiError::Unprocessable(problems) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                serde_json::json!({ "error": "the assertion does not parse", "parseErrors": problems }),
            ),
        };
        (status, Json(body)).into_response()
    }
}
