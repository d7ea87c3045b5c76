use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use cartae_cli::server::{router, AppState};
use cartae_core::pipeline::{run_pipeline, PipelineConfig};
use cartae_core::store::load;
use cartae_core::terminology::NormalizationRules;
use cartae_core::SearchParams;

#[derive(Parser)]
#[command(name = "cartae", version, about = "Archaeological inventory pipeline and search service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline described by a config file and write the store.
    Ingest {
        #[arg(long)]
        config: PathBuf,
    },
    /// Search a store and print the result page as JSON.
    Query {
        #[arg(long)]
        store: PathBuf,
        #[command(flatten)]
        params: QueryArgs,
    },
    /// Serve the HTTP API over a store.
    Serve {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Pipeline config whose normalization rules apply to curation.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct QueryArgs {
    /// Comma-separated text terms, all required.
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    concept: Option<String>,
    #[arg(long)]
    place: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    from: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    to: Option<String>,
    #[arg(long)]
    municipality: Option<String>,
    #[arg(long)]
    limit: Option<String>,
    #[arg(long)]
    offset: Option<String>,
}

impl From<QueryArgs> for SearchParams {
    fn from(a: QueryArgs) -> Self {
        SearchParams {
            q: a.q,
            concept: a.concept,
            place: a.place,
            from: a.from,
            to: a.to,
            municipality: a.municipality,
            limit: a.limit,
            offset: a.offset,
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest { config } => {
            let cfg = PipelineConfig::from_file(&config)?;
            let report = run_pipeline(&cfg)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Query { store, params } => {
            let snapshot = load(&store).with_context(|| format!("loading store {}", store.display()))?;
            let page = cartae_cli::search(&snapshot, &params.into())?;
            println!("{}", serde_json::to_string_pretty(&page)?);
        }
        Command::Serve { store, port, config } => {
            let rules = match config {
                Some(path) => PipelineConfig::from_file(&path)?.normalization,
                None => NormalizationRules::default(),
            };
            let snapshot = load(&store).with_context(|| format!("loading store {}", store.display()))?;
            let state = Arc::new(AppState::new(snapshot, store, rules));
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
                println!("listening on http://{}", listener.local_addr()?);
                axum::serve(listener, router(state))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                anyhow::Ok(())
            })?;
        }
    }
    Ok(())
}
