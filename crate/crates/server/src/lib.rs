//! HTTP/JSON service for the gradebook, mounted under `/api/v1`.
//!
//! Handlers are stateless; all shared state lives in the [`Store`]. Every
//! entity is reachable only through a class its caller owns, and anything
//! outside that scope answers `404 not_found`.

pub mod auth;
pub mod config;
pub mod error;
pub mod mail;
mod routes;
pub mod views;

use std::path::PathBuf;
use std::sync::Arc;

use axum::Router;
use rubrics_core::export::MailTransport;
use rubrics_store::Store;
use tower_http::services::ServeDir;
use tower_http::trace::TraceLayer;

pub use error::{ApiError, ApiResult};

/// Tunables shared by all handlers.
#[derive(Debug, Clone)]
pub struct Settings {
    pub token_ttl: chrono::Duration,
    pub max_in_flight: usize,
    pub mail_subject: String,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { token_ttl: chrono::Duration::hours(24), max_in_flight: 4, mail_subject: "Your feedback".into() }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub transport: Arc<dyn MailTransport>,
    pub settings: Arc<Settings>,
}

impl AppState {
    pub fn new(store: Store, transport: Arc<dyn MailTransport>, settings: Settings) -> AppState {
        AppState { store: Arc::new(store), transport, settings: Arc::new(settings) }
    }
}

/// Builds the full application. `ui_dir`, when set, is served under `/app`.
pub fn app(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let mut router = Router::new().nest("/api/v1", routes::api()).with_state(state);
    if let Some(dir) = ui_dir {
        router = router.nest_service("/app", ServeDir::new(dir).append_index_html_on_directories(true));
    }
    router.layer(TraceLayer::new_for_http())
}
