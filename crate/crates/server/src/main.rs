use std::sync::Arc;

use anyhow::Context;
use ran_core::Registry;
use ran_server::{AppState, ServerConfig};
use tracing_subscriber::EnvFilter;

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let cfg = ServerConfig::from_env()?;
    let registry = tokio::task::spawn_blocking({
        let rc = cfg.registry_config();
        move || Registry::open(rc)
    })
    .await?
    .with_context(|| format!("opening registry at {}", cfg.data_dir.display()))?;
    let state = AppState::new(Arc::new(registry), cfg.max_blob_bytes, cfg.uploads_per_ip);
    let listener = tokio::net::TcpListener::bind(cfg.listen)
        .await
        .with_context(|| format!("binding {}", cfg.listen))?;
    tracing::info!(addr = %listener.local_addr()?, data_dir = %cfg.data_dir.display(), "listening");
    ran_server::serve(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
