use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::Parser;
use irf_gateway::{http, Clock, Gateway, GatewayConfig, ManualClock, SystemClock};
use tracing_subscriber::EnvFilter;

/// Serve the interactive recommendation gateway.
#[derive(Debug, Parser)]
#[command(name = "irf-gateway", version)]
struct Args {
    /// Configuration file.
    #[arg(long, env = "IRF_CONFIG", default_value = "config/irf.json")]
    config: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Pin the clock to this Unix time instead of following the system clock.
    #[arg(long, hide = true)]
    now: Option<i64>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let cfg = GatewayConfig::load(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    let clock: Arc<dyn Clock> = match args.now {
        Some(t) => Arc::new(ManualClock::new(t)),
        None => Arc::new(SystemClock),
    };
    let gateway = Arc::new(Gateway::bootstrap(cfg, clock).await?);
    let (addr, handle) = http::spawn(gateway, SocketAddr::from(([127, 0, 0, 1], args.port))).await?;
    tracing::info!("gateway listening on http://{addr}/");
    tokio::select! {
        r = handle => r?,
        _ = tokio::signal::ctrl_c() => tracing::info!("shutting down"),
    }
    Ok(())
}
