use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use tutor_core::sim::{AgentKind, AgentParams, CohortConfig, ConditionMix, SWEEP_MS};
use tutor_service::api::{router, spawn_sweeper, system_clock, AppState};
use tutor_service::commands::{analyze_dir, load_curriculum, simulate};
use tutor_service::store::LogStore;

#[derive(Parser)]
#[command(name = "tutor", about = "Propositional logic proof tutor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API.
    Serve {
        /// Problem bank (TOML). Defaults to the bundled bank.
        #[arg(long)]
        bank: Option<PathBuf>,
        /// Prior student solutions used to seed the hint models.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory of session logs; existing logs are replayed at startup.
        #[arg(long, default_value = "logs")]
        logs: PathBuf,
    },
    /// Run simulated students and write one log per session.
    Simulate {
        #[arg(long)]
        n: usize,
        /// assertions, messages or mixed.
        #[arg(long, default_value = "mixed")]
        condition: ConditionMix,
        /// follow-hints, ignore-hints or random.
        #[arg(long, default_value = "follow-hints")]
        policy: AgentKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        bank: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Compute metrics and clusters over a directory of logs.
    Analyze {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    match Cli::parse().command {
        Command::Serve { bank, corpus, port, logs } => serve(bank, corpus, port, logs),
        Command::Simulate { n, condition, policy, seed, out, bank, corpus } => {
            let curriculum = Arc::new(load_curriculum(bank.as_deref(), corpus.as_deref())?);
            let config = CohortConfig { n, conditions: condition, agent: policy, seed, params: AgentParams::default() };
            let written = simulate(curriculum, &config, &out)?;
            println!("wrote {written} session logs to {}", out.display());
            Ok(())
        }
        Command::Analyze { logs, out } => {
            let report = analyze_dir(&logs, &out)?;
            let k = report.cluster.as_ref().map_or("none".to_string(), |m| m.k.to_string());
            println!("analyzed {} sessions, {} clusters; report at {}", report.students.len(), k, out.display());
            Ok(())
        }
    }
}

fn serve(bank: Option<PathBuf>, corpus: Option<PathBuf>, port: u16, logs: PathBuf) -> Result<()> {
    let curriculum = Arc::new(load_curriculum(bank.as_deref(), corpus.as_deref())?);
    let store = LogStore::open(&logs)?;
    let state = Arc::new(AppState::recover(curriculum, store, system_clock()).context("recovering sessions")?);
    tracing::info!(sessions = state.session_ids().len(), "recovered sessions");
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        spawn_sweeper(state.clone(), Duration::from_millis(SWEEP_MS));
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
        tracing::info!(%port, "listening");
        axum::serve(listener, router(state)).await?;
        Ok(())
    })
}
