use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use rubrics_core::domain::{builtin_rubrics, Rubric};
use rubrics_core::export::MailTransport;
use rubrics_server::config::{Cli, Command, ServeConfig, TransportKind};
use rubrics_server::{app, mail, AppState, Settings};
use rubrics_store::Store;
use tracing_subscriber::EnvFilter;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::CheckRubric { path } => check_rubric(&path),
        Command::Serve(cfg) => {
            tracing_subscriber::fmt()
                .json()
                .with_writer(std::io::stderr)
                .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
                .init();
            let runtime = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(e) => {
                    eprintln!("error: cannot start runtime: {e}");
                    return ExitCode::FAILURE;
                }
            };
            match runtime.block_on(serve(cfg)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    tracing::error!(error = %e, "service stopped");
                    ExitCode::FAILURE
                }
            }
        }
    }
}

fn check_rubric(path: &std::path::Path) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
    };
    match Rubric::from_toml_str(&text) {
        Ok(rubric) => {
            println!("{}: {} criteria, maximum {}", rubric.name(), rubric.criteria().len(), rubric.max_score());
            for c in rubric.criteria() {
                let levels: Vec<String> = c.levels.iter().map(|l| format!("{}={}", l.label, l.points)).collect();
                println!("  {}: {}", c.name, levels.join(", "));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            ExitCode::FAILURE
        }
    }
}

fn transport(cfg: &ServeConfig) -> Result<Arc<dyn MailTransport>, String> {
    match cfg.transport {
        TransportKind::File => mail::file_transport(&cfg.outbox).map_err(|e| format!("outbox {}: {e}", cfg.outbox.display())),
        #[cfg(feature = "smtp")]
        TransportKind::Smtp => {
            let url = cfg.smtp_url.as_deref().ok_or("--smtp-url is required with --transport smtp")?;
            Ok(Arc::new(mail::SmtpTransport::new(url, &cfg.mail_from)?))
        }
        #[cfg(not(feature = "smtp"))]
        TransportKind::Smtp => Err("this build has no SMTP support; rebuild with --features smtp".into()),
    }
}

async fn serve(cfg: ServeConfig) -> Result<(), String> {
    let store = Store::open(&cfg.db).map_err(|e| format!("database {}: {e}", cfg.db.display()))?;
    let seeded = store.seed_rubrics(&builtin_rubrics()).map_err(|e| e.to_string())?;
    let transport = transport(&cfg)?;
    let settings = Settings {
        token_ttl: chrono::Duration::hours(cfg.token_ttl_hours.into()),
        max_in_flight: cfg.max_in_flight as usize,
        mail_subject: cfg.mail_subject.clone(),
    };
    let state = AppState::new(store, transport, settings);
    let listener = tokio::net::TcpListener::bind(cfg.listen).await.map_err(|e| format!("bind {}: {e}", cfg.listen))?;
    tracing::info!(listen = %cfg.listen, db = %cfg.db.display(), seeded_rubrics = seeded, "serving");
    axum::serve(listener, app(state, cfg.ui_dir.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())
}
