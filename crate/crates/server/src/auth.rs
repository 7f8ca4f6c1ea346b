//! Credentials and session tokens.
//!
//! Passwords are stored as Argon2id PHC strings. Session tokens are 256
//! random bits, hex encoded; the store only keeps their SHA-256 digest.

use std::sync::LazyLock;

use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::Argon2;
use axum::extract::FromRequestParts;
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use axum::http::HeaderMap;
use chrono::Utc;
use rand::RngCore;
use rubrics_core::domain::{PasswordDigest, User};
use sha2::{Digest, Sha256};

use crate::error::ApiError;
use crate::AppState;

pub const MIN_PASSWORD_CHARS: usize = 8;

pub fn hash_password(password: &str) -> Result<PasswordDigest, ApiError> {
    let mut salt = [0u8; 16];
    rand::rng().fill_bytes(&mut salt);
    let salt = SaltString::encode_b64(&salt).map_err(|e| ApiError::internal(e.to_string()))?;
    let hash = Argon2::default()
        .hash_password(password.as_bytes(), &salt)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(PasswordDigest(hash.to_string()))
}

/// Verifies `password` against `digest`. A malformed digest never matches.
pub fn verify_password(password: &str, digest: &PasswordDigest) -> bool {
    match PasswordHash::new(&digest.0) {
        Ok(parsed) => Argon2::default().verify_password(password.as_bytes(), &parsed).is_ok(),
        Err(_) => false,
    }
}

/// Digest checked when the email is unknown, so both failure paths cost the
/// same hash computation.
static DUMMY_DIGEST: LazyLock<PasswordDigest> =
    LazyLock::new(|| hash_password("not-a-real-password").expect("hashing a constant succeeds"));

/// Returns the user only if `password` matches; always performs one hash.
pub fn check_login(user: Option<User>, password: &str) -> Option<User> {
    match user {
        Some(user) if verify_password(password, &user.credential) => Some(user),
        Some(_) => None,
        None => {
            verify_password(password, &DUMMY_DIGEST);
            None
        }
    }
}

pub fn new_token() -> String {
    let mut bytes = [0u8; 32];
    rand::rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

pub fn token_digest(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

/// Minimal syntactic check: `local@domain.tld`, no whitespace, at most 254
/// bytes.
pub fn is_valid_email(email: &str) -> bool {
    if email.len() > 254 || email.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return false;
    }
    let Some((local, domain)) = email.split_once('@') else { return false };
    !local.is_empty()
        && !domain.contains('@')
        && domain.split('.').count() >= 2
        && domain.split('.').all(|label| !label.is_empty())
}

pub(crate) fn bearer_token(headers: &HeaderMap) -> Option<&str> {
    let value = headers.get(AUTHORIZATION)?.to_str().ok()?;
    let (scheme, token) = value.split_once(' ')?;
    scheme.eq_ignore_ascii_case("bearer").then(|| token.trim()).filter(|t| !t.is_empty())
}

/// The authenticated caller. Extraction fails with `401 unauthenticated`
/// for a missing, unknown or expired token.
#[derive(Debug, Clone)]
pub struct AuthUser(pub User);

impl FromRequestParts<AppState> for AuthUser {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<AuthUser, ApiError> {
        let token = bearer_token(&parts.headers).ok_or_else(ApiError::unauthenticated)?;
        let user = state.store.session_user(&token_digest(token), Utc::now())?;
        user.map(AuthUser).ok_or_else(ApiError::unauthenticated)
    }
}
