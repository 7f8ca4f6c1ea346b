mod account;
mod assessment;
mod roster;
mod rubrics;

use axum::extract::{FromRequest, FromRequestParts, Request};
use axum::http::request::Parts;
use axum::routing::{get, post, put};
use axum::{Json, Router};
use rubrics_core::domain::{Class, Course, Id, Rubric, Student, User};
use rubrics_store::AssignmentContext;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::error::{ApiError, ApiResult};
use crate::AppState;

pub(crate) fn api() -> Router<AppState> {
    Router::new()
        .route("/healthz", get(health))
        .route("/auth/register", post(account::register))
        .route("/auth/login", post(account::login))
        .route("/auth/logout", post(account::logout))
        .route("/auth/me", get(account::me))
        .route("/classes", get(roster::list_classes).post(roster::create_class))
        .route("/classes/{id}", get(roster::get_class).put(roster::update_class).delete(roster::delete_class))
        .route("/classes/{id}/students", get(roster::list_students).post(roster::add_student))
        .route(
            "/classes/{id}/students/{student}",
            get(roster::get_student).put(roster::update_student).delete(roster::remove_student),
        )
        .route("/classes/{id}/attendance", get(roster::list_attendance))
        .route("/classes/{id}/attendance/{date}", get(roster::get_attendance).put(roster::put_attendance))
        .route("/courses", get(roster::list_courses).post(roster::create_course))
        .route("/courses/{id}", get(roster::get_course).put(roster::update_course).delete(roster::delete_course))
        .route("/notes", get(roster::list_notes).post(roster::create_note))
        .route("/notes/{id}", get(roster::get_note).put(roster::update_note).delete(roster::delete_note))
        .route("/rubrics", get(rubrics::list).post(rubrics::create))
        .route("/rubrics/predefined", get(rubrics::predefined))
        .route("/rubrics/{id}", get(rubrics::get_one).put(rubrics::update).delete(rubrics::delete))
        .route("/assignments", get(assessment::list).post(assessment::create))
        .route(
            "/assignments/{id}",
            get(assessment::get_one).put(assessment::update).delete(assessment::delete),
        )
        .route("/assignments/{id}/grades", get(assessment::list_grades))
        .route(
            "/assignments/{id}/grades/{student}",
            put(assessment::put_grade).get(assessment::get_grade).delete(assessment::delete_grade),
        )
        .route("/assignments/{id}/stats", get(assessment::stats))
        .route("/assignments/{id}/graphs", get(assessment::graphs))
        .route("/assignments/{id}/export.csv", get(assessment::export_csv))
        .route("/assignments/{id}/import.csv", post(assessment::import_csv))
        .route("/assignments/{id}/report.html", get(assessment::report_html))
        .route("/assignments/{id}/feedback", post(assessment::feedback))
        .fallback(|| async { ApiError::not_found("route") })
}

async fn health(axum::extract::State(state): axum::extract::State<AppState>) -> Json<Value> {
    Json(json!({ "status": "ok", "schema_version": state.store.schema_version() }))
}

/// JSON body whose rejection uses the API error shape.
pub(crate) struct JsonBody<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for JsonBody<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        let Json(value) = Json::<T>::from_request(req, state).await?;
        Ok(JsonBody(value))
    }
}

/// Query string whose rejection uses the API error shape.
pub(crate) struct QueryParams<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for QueryParams<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
        let axum::extract::Query(value) = axum::extract::Query::<T>::from_request_parts(parts, state).await?;
        Ok(QueryParams(value))
    }
}

pub(crate) fn owned_class(state: &AppState, user: &User, id: &Id) -> ApiResult<Class> {
    match state.store.get::<Class>(id)? {
        Some(class) if class.owner_id == user.id => Ok(class),
        _ => Err(ApiError::not_found("class")),
    }
}

pub(crate) fn owned_course(state: &AppState, user: &User, id: &Id) -> ApiResult<(Course, Class)> {
    let course = state.store.get::<Course>(id)?.ok_or_else(|| ApiError::not_found("course"))?;
    let class = owned_class(state, user, &course.class_id).map_err(|_| ApiError::not_found("course"))?;
    Ok((course, class))
}

pub(crate) fn owned_assignment(state: &AppState, user: &User, id: &Id) -> ApiResult<(AssignmentContext, Rubric)> {
    let ctx = state
        .store
        .assignment_context(id)?
        .filter(|ctx| ctx.class.owner_id == user.id)
        .ok_or_else(|| ApiError::not_found("assignment"))?;
    let rubric = state.store.require::<Rubric>(&ctx.assignment.rubric_id)?;
    Ok((ctx, rubric))
}

pub(crate) fn visible_rubric(state: &AppState, user: &User, id: &Id) -> ApiResult<Rubric> {
    match state.store.rubric_owner(id)? {
        Some(None) => {}
        Some(Some(owner)) if owner == user.id => {}
        _ => return Err(ApiError::not_found("rubric")),
    }
    state.store.get::<Rubric>(id)?.ok_or_else(|| ApiError::not_found("rubric"))
}

pub(crate) fn owned_student(state: &AppState, user: &User, id: &Id) -> ApiResult<Student> {
    match state.store.student_owner(id)? {
        Some(Some(owner)) if owner == user.id => {}
        _ => return Err(ApiError::not_found("student")),
    }
    state.store.get::<Student>(id)?.ok_or_else(|| ApiError::not_found("student"))
}

pub(crate) fn require_name(field: &'static str, value: &str) -> ApiResult<String> {
    let trimmed = value.trim();
    if trimmed.is_empty() {
        return Err(ApiError::unprocessable("empty_name", format!("{field} must not be empty"))
            .with_details(json!({ "field": field })));
    }
    Ok(trimmed.to_string())
}
