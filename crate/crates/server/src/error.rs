//! Uniform error body: `{"error": {"code", "message", "details"}}`.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use rubrics_core::domain::{RosterError, RubricError};
use rubrics_core::export::{CsvError, ReportError};
use rubrics_core::grading::GradingError;
use rubrics_core::score::ScoreError;
use rubrics_core::stats::StatsError;
use rubrics_store::StoreError;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Option<Value>,
}

#[derive(Serialize)]
struct Body<'a> {
    error: Inner<'a>,
}

#[derive(Serialize)]
struct Inner<'a> {
    code: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    details: Option<&'a Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError { status, code, message: message.into(), details: None }
    }

    pub fn with_details(mut self, details: Value) -> ApiError {
        self.details = Some(details);
        self
    }

    pub fn not_found(what: &str) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("{what} not found"))
    }

    pub fn unauthenticated() -> ApiError {
        ApiError::new(StatusCode::UNAUTHORIZED, "unauthenticated", "missing, invalid or expired session token")
    }

    pub fn invalid_credentials() -> ApiError {
        ApiError::new(StatusCode::UNAUTHORIZED, "invalid_credentials", "email or password is incorrect")
    }

    pub fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    pub fn unprocessable(code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    pub fn conflict(code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::CONFLICT, code, message)
    }

    pub fn internal(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = self.code, message = %self.message, "request failed");
        }
        let body = Body { error: Inner { code: self.code, message: &self.message, details: self.details.as_ref() } };
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> ApiError {
        let message = e.to_string();
        match e {
            StoreError::NotFound { kind, .. } => ApiError::not_found(kind),
            StoreError::ForeignKeyViolation(_) => ApiError::conflict("in_use", message),
            StoreError::UniqueViolation(_) => ApiError::conflict("already_exists", message),
            StoreError::UnknownClass(_) => ApiError::not_found("class"),
            StoreError::StudentNotEnrolled(id) => ApiError::unprocessable("student_not_enrolled", message)
                .with_details(json!({ "student_id": id })),
            StoreError::Invalid(_) => ApiError::unprocessable("invalid_value", message),
            StoreError::SchemaTooNew { .. } | StoreError::Corrupt(_) | StoreError::IoFailure(_) | StoreError::Sqlite(_) => {
                ApiError::internal(message)
            }
        }
    }
}

impl From<RubricError> for ApiError {
    fn from(e: RubricError) -> ApiError {
        let message = e.to_string();
        let (code, details) = match &e {
            RubricError::EmptyCriteria => ("empty_criteria", None),
            RubricError::DuplicateCriterion(name) => ("duplicate_criterion", Some(json!({ "criterion": name }))),
            RubricError::TooFewLevels { criterion, count } => {
                ("too_few_levels", Some(json!({ "criterion": criterion, "count": count })))
            }
            RubricError::NegativePoints { criterion, level } => {
                ("negative_points", Some(json!({ "criterion": criterion, "level": level })))
            }
            RubricError::NonMonotonicLevels { criterion } => {
                ("non_monotonic_levels", Some(json!({ "criterion": criterion })))
            }
            RubricError::DuplicateLevel { criterion, label } => {
                ("duplicate_level", Some(json!({ "criterion": criterion, "level": label })))
            }
            RubricError::Format(_) => ("rubric_format", None),
        };
        let err = ApiError::unprocessable(code, message);
        match details {
            Some(d) => err.with_details(d),
            None => err,
        }
    }
}

impl From<GradingError> for ApiError {
    fn from(e: GradingError) -> ApiError {
        let message = e.to_string();
        match e {
            GradingError::RubricMismatch { .. } => ApiError::unprocessable("rubric_mismatch", message),
            GradingError::StudentNotEnrolled(id) => ApiError::unprocessable("student_not_enrolled", message)
                .with_details(json!({ "student_id": id })),
            GradingError::MissingCriterion(c) => {
                ApiError::unprocessable("missing_criterion", message).with_details(json!({ "criterion": c }))
            }
            GradingError::UnknownCriterion(c) => {
                ApiError::unprocessable("unknown_criterion", message).with_details(json!({ "criterion": c }))
            }
            GradingError::UnknownLevel { criterion, label } => ApiError::unprocessable("unknown_level", message)
                .with_details(json!({ "criterion": criterion, "level": label })),
            GradingError::MixedAssignments => ApiError::internal(message),
        }
    }
}

impl From<RosterError> for ApiError {
    fn from(e: RosterError) -> ApiError {
        let message = e.to_string();
        match e {
            RosterError::DuplicateStudent(id) => {
                ApiError::unprocessable("duplicate_student", message).with_details(json!({ "student_id": id }))
            }
            RosterError::StudentNotEnrolled(id) => ApiError::unprocessable("student_not_enrolled", message)
                .with_details(json!({ "student_id": id })),
            RosterError::ThresholdOutOfRange { threshold, max } => {
                ApiError::unprocessable("threshold_out_of_range", message)
                    .with_details(json!({ "threshold": threshold, "max": max }))
            }
            RosterError::RubricMismatch { .. } => ApiError::unprocessable("rubric_mismatch", message),
            RosterError::EmptyTitle => ApiError::unprocessable("empty_title", message),
        }
    }
}

impl From<StatsError> for ApiError {
    fn from(e: StatsError) -> ApiError {
        ApiError::internal(e.to_string())
    }
}

impl From<ReportError> for ApiError {
    fn from(e: ReportError) -> ApiError {
        ApiError::internal(e.to_string())
    }
}

impl From<ScoreError> for ApiError {
    fn from(e: ScoreError) -> ApiError {
        ApiError::unprocessable("invalid_score", e.to_string())
    }
}

impl From<CsvError> for ApiError {
    fn from(e: CsvError) -> ApiError {
        let message = e.to_string();
        match e {
            CsvError::HeaderMismatch { expected, found } => ApiError::unprocessable("csv_header_mismatch", message)
                .with_details(json!({ "expected": expected, "found": found })),
            CsvError::RowError { row, .. } => {
                ApiError::unprocessable("csv_row_error", message).with_details(json!({ "row": row }))
            }
            CsvError::Malformed(_) => ApiError::unprocessable("csv_malformed", message),
            CsvError::MixedAssignments | CsvError::InconsistentRecord { .. } => ApiError::internal(message),
        }
    }
}

impl From<axum::extract::rejection::JsonRejection> for ApiError {
    fn from(e: axum::extract::rejection::JsonRejection) -> ApiError {
        ApiError::bad_request(e.body_text())
    }
}

impl From<axum::extract::rejection::QueryRejection> for ApiError {
    fn from(e: axum::extract::rejection::QueryRejection) -> ApiError {
        ApiError::bad_request(e.body_text())
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
