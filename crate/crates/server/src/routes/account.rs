use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::Json;
use chrono::Utc;
use rubrics_core::domain::{Id, User};
use rubrics_store::{Actor, StoreError};

use super::JsonBody;
use crate::auth::{self, AuthUser, MIN_PASSWORD_CHARS};
use crate::error::{ApiError, ApiResult};
use crate::views::{LoginRequest, RegisterRequest, SessionView, UserView};
use crate::AppState;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))
}

pub(super) async fn register(
    State(state): State<AppState>,
    JsonBody(req): JsonBody<RegisterRequest>,
) -> ApiResult<(StatusCode, Json<UserView>)> {
    let email = req.email.trim().to_string();
    if !auth::is_valid_email(&email) {
        return Err(ApiError::unprocessable("invalid_email", "email address is not valid"));
    }
    if req.password.chars().count() < MIN_PASSWORD_CHARS {
        return Err(ApiError::unprocessable(
            "weak_password",
            format!("password must be at least {MIN_PASSWORD_CHARS} characters"),
        ));
    }
    let duplicate = || ApiError::conflict("duplicate_email", "an account with this email already exists");
    if state.store.user_by_email(&email)?.is_some() {
        return Err(duplicate());
    }
    let password = req.password;
    let credential = blocking(move || auth::hash_password(&password)).await??;
    let display_name = match req.display_name.trim() {
        "" => email.split('@').next().unwrap_or_default().to_string(),
        name => name.to_string(),
    };
    let user = User { id: Id::generate(), email, display_name, credential };
    match state.store.put(&Actor::System, &user) {
        Ok(_) => {}
        Err(StoreError::UniqueViolation(_)) => return Err(duplicate()),
        Err(e) => return Err(e.into()),
    }
    tracing::info!(user_id = %user.id, "registered");
    Ok((StatusCode::CREATED, Json(UserView::from(&user))))
}

pub(super) async fn login(
    State(state): State<AppState>,
    JsonBody(req): JsonBody<LoginRequest>,
) -> ApiResult<Json<SessionView>> {
    let candidate = state.store.user_by_email(req.email.trim())?;
    let password = req.password;
    let user = blocking(move || auth::check_login(candidate, &password)).await?.ok_or_else(ApiError::invalid_credentials)?;
    let token = auth::new_token();
    let expires_at = Utc::now() + state.settings.token_ttl;
    state.store.create_session(&auth::token_digest(&token), &user.id, expires_at)?;
    Ok(Json(SessionView { token, user: UserView::from(&user), expires_at }))
}

pub(super) async fn logout(State(state): State<AppState>, _user: AuthUser, headers: HeaderMap) -> ApiResult<StatusCode> {
    if let Some(token) = auth::bearer_token(&headers) {
        state.store.revoke_session(&auth::token_digest(token))?;
    }
    Ok(StatusCode::NO_CONTENT)
}

pub(super) async fn me(AuthUser(user): AuthUser) -> Json<UserView> {
    Json(UserView::from(&user))
}
