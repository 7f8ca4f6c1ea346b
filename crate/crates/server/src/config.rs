//! Command-line configuration. Every flag has an environment override.

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "rubricsd", version, about = "Rubric-based gradebook service")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve(ServeConfig),
    /// Validate a rubric definition file and print its summary.
    CheckRubric {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportKind {
    /// Write messages as files into the outbox directory.
    File,
    /// Send through an SMTP relay (requires the `smtp` feature).
    Smtp,
}

#[derive(Debug, Clone, Args)]
pub struct ServeConfig {
    #[arg(long, env = "RUBRICS_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    #[arg(long, env = "RUBRICS_DB", default_value = "gradebook.db")]
    pub db: PathBuf,
    #[arg(long, env = "RUBRICS_TRANSPORT", value_enum, default_value = "file")]
    pub transport: TransportKind,
    #[arg(long, env = "RUBRICS_OUTBOX", default_value = "outbox")]
    pub outbox: PathBuf,
    #[arg(long, env = "RUBRICS_SMTP_URL")]
    pub smtp_url: Option<String>,
    #[arg(long, env = "RUBRICS_MAIL_FROM", default_value = "gradebook@localhost")]
    pub mail_from: String,
    #[arg(long, env = "RUBRICS_MAIL_SUBJECT", default_value = "Your feedback")]
    pub mail_subject: String,
    #[arg(long, env = "RUBRICS_TOKEN_TTL_HOURS", default_value_t = 24, value_parser = clap::value_parser!(u32).range(1..))]
    pub token_ttl_hours: u32,
    #[arg(long, env = "RUBRICS_MAX_IN_FLIGHT", default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..=64))]
    pub max_in_flight: u32,
    /// Directory of a built web UI, served under /app.
    #[arg(long, env = "RUBRICS_UI_DIR")]
    pub ui_dir: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn serve_defaults() {
        let cli = Cli::try_parse_from(["rubricsd", "serve"]).unwrap();
        let Command::Serve(cfg) = cli.command else { panic!("expected serve") };
        assert_eq!(cfg.token_ttl_hours, 24);
        assert_eq!(cfg.transport, TransportKind::File);
        assert_eq!(cfg.listen, "127.0.0.1:8080".parse().unwrap());
    }

    #[test]
    fn rejects_zero_ttl() {
        assert!(Cli::try_parse_from(["rubricsd", "serve", "--token-ttl-hours", "0"]).is_err());
    }
}
