use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::header::CONTENT_TYPE;
use axum::http::{HeaderMap, StatusCode};
use axum::Json;
use rubrics_core::domain::{Id, Rubric};
use rubrics_store::Actor;

use super::visible_rubric;
use crate::auth::AuthUser;
use crate::error::{ApiError, ApiResult};
use crate::views::{RubricRequest, RubricView};
use crate::AppState;

/// Accepts a JSON body, or a rubric file when the content type is TOML.
fn parse_body(id: Id, headers: &HeaderMap, body: &[u8]) -> ApiResult<Rubric> {
    let content_type = headers.get(CONTENT_TYPE).and_then(|v| v.to_str().ok()).unwrap_or("");
    if content_type.starts_with("application/toml") || content_type.starts_with("text/toml") {
        let text = std::str::from_utf8(body).map_err(|_| ApiError::bad_request("rubric file is not UTF-8"))?;
        let parsed = Rubric::from_toml_str(text)?;
        return Ok(Rubric::with_id(id, parsed.name(), parsed.description(), false, parsed.criteria().to_vec())?);
    }
    if !content_type.starts_with("application/json") {
        return Err(ApiError::new(
            StatusCode::UNSUPPORTED_MEDIA_TYPE,
            "unsupported_media_type",
            "expected application/json or application/toml",
        ));
    }
    let req: RubricRequest = serde_json::from_slice(body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(Rubric::with_id(id, req.name, req.description, false, req.criteria)?)
}

pub(super) async fn list(State(state): State<AppState>, AuthUser(user): AuthUser) -> ApiResult<Json<Vec<RubricView>>> {
    Ok(Json(state.store.rubrics_visible_to(&user.id)?.into_iter().map(RubricView::from).collect()))
}

pub(super) async fn predefined(State(state): State<AppState>, _user: AuthUser) -> ApiResult<Json<Vec<RubricView>>> {
    let all = state.store.list::<Rubric>()?;
    Ok(Json(all.into_iter().filter(Rubric::is_predefined).map(RubricView::from).collect()))
}

pub(super) async fn create(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<RubricView>)> {
    let rubric = parse_body(Id::generate(), &headers, &body)?;
    state.store.put(&Actor::User(user.id.clone()), &rubric)?;
    Ok((StatusCode::CREATED, Json(rubric.into())))
}

pub(super) async fn get_one(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<Json<RubricView>> {
    Ok(Json(visible_rubric(&state, &user, &id)?.into()))
}

fn editable(state: &AppState, user: &rubrics_core::domain::User, id: &Id) -> ApiResult<Rubric> {
    let rubric = visible_rubric(state, user, id)?;
    if rubric.is_predefined() || state.store.rubric_owner(id)?.flatten().as_ref() != Some(&user.id) {
        return Err(ApiError::conflict("read_only", "shared rubrics cannot be changed; copy them instead"));
    }
    Ok(rubric)
}

/// Replaces a rubric. Refused once an assignment uses it.
pub(super) async fn update(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Json<RubricView>> {
    editable(&state, &user, &id)?;
    let rubric = parse_body(id, &headers, &body)?;
    state.store.put(&Actor::User(user.id.clone()), &rubric)?;
    Ok(Json(rubric.into()))
}

pub(super) async fn delete(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<StatusCode> {
    editable(&state, &user, &id)?;
    state.store.delete::<Rubric>(&Actor::User(user.id.clone()), &id)?;
    Ok(StatusCode::NO_CONTENT)
}
