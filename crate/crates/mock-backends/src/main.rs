use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::Parser;
use irf_mock::{spawn, Corpus, MockServices, ScoreScale};
use tracing_subscriber::EnvFilter;

/// Serve the mock recommender, user and item services.
#[derive(Debug, Parser)]
#[command(name = "irf-mock", version)]
struct Args {
    #[arg(long, default_value_t = 9000)]
    port: u16,
    /// Corpus JSON with `items` and `users`; the bundled corpus if omitted.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ScoreScale::Unit)]
    score_scale: ScoreScale,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let corpus = match &args.corpus {
        Some(path) => Corpus::from_path(path).with_context(|| format!("loading {}", path.display()))?,
        None => Corpus::bundled(),
    };
    tracing::info!(items = corpus.items.len(), users = corpus.users.len(), scale = ?args.score_scale, "corpus loaded");
    let services = Arc::new(MockServices::new(corpus, args.score_scale));
    let (addr, handle) = spawn(services, SocketAddr::from(([127, 0, 0, 1], args.port))).await?;
    tracing::info!("mock services listening on http://{addr}/");
    handle.await?;
    Ok(())
}
