//! HTTP/JSON service over a [`Registry`]. Every route lives under `/api/v1`
//! and authenticates with `Authorization: Bearer <token>`, except account
//! registration and login.

mod error;
mod extract;
mod handlers;
mod limit;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use axum::extract::DefaultBodyLimit;
use axum::routing::{delete, get, post};
use axum::Router;
use ran_core::{Config, Registry};
use tokio::net::TcpListener;

pub use error::{status_of, ApiError};
pub use limit::UploadCap;

pub const API_PREFIX: &str = "/api/v1";

/// Room for multipart framing on top of the blob itself.
const MULTIPART_SLACK: u64 = 64 * 1024;

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<Registry>,
    pub uploads: Arc<UploadCap>,
    pub max_blob_bytes: u64,
}

impl AppState {
    pub fn new(registry: Arc<Registry>, max_blob_bytes: u64, uploads_per_ip: usize) -> Self {
        Self {
            registry,
            uploads: Arc::new(UploadCap::new(uploads_per_ip)),
            max_blob_bytes,
        }
    }
}

/// Runs a registry call on the blocking pool.
pub(crate) async fn blocking<T, F>(state: &AppState, f: F) -> Result<T, ApiError>
where
    F: FnOnce(&Registry) -> ran_core::Result<T> + Send + 'static,
    T: Send + 'static,
{
    let reg = state.registry.clone();
    match tokio::task::spawn_blocking(move || f(&reg)).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => {
            tracing::error!("registry task failed: {e}");
            Err(ApiError::new(
                axum::http::StatusCode::INTERNAL_SERVER_ERROR,
                "Internal",
                "request handler failed",
            ))
        }
    }
}

pub fn router(state: AppState) -> Router {
    use handlers::*;

    let upload_limit = usize::try_from(state.max_blob_bytes.saturating_add(MULTIPART_SLACK))
        .unwrap_or(usize::MAX);
    let api = Router::new()
        .route("/users", post(register))
        .route("/sessions", post(login).delete(logout))
        .route("/projects", get(list_projects).post(create_project))
        .route(
            "/projects/{id}",
            get(get_project).patch(update_project).delete(delete_project),
        )
        .route("/projects/{id}/copies", post(copy_project))
        .route("/projects/{id}/imports", post(import_selection))
        .route("/projects/{id}/package", get(package))
        .route(
            "/projects/{id}/rating",
            get(rating_status).put(rate).delete(unrate),
        )
        .route("/projects/{id}/events", get(events))
        .route("/projects/{id}/folders", post(create_folder))
        .route(
            "/folders/{id}",
            get(list_folder).patch(rename_folder).delete(delete_folder),
        )
        .route("/folders/{id}/artifacts", post(add_artifact))
        .route("/artifacts/{id}", delete(remove_artifact))
        .route(
            "/assets",
            get(search_assets)
                .post(upload_asset)
                .layer(DefaultBodyLimit::max(upload_limit)),
        )
        .route("/assets/{id}", get(download_asset))
        .route("/assets/{id}/meta", get(asset_meta));
    Router::new()
        .nest(API_PREFIX, api)
        .fallback(not_found)
        .with_state(state)
}

/// Process configuration, read from `RAN_*` environment variables.
#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    pub max_blob_bytes: u64,
    pub token_ttl_secs: i64,
    pub uploads_per_ip: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: PathBuf::from("ran-data"),
            max_blob_bytes: ran_core::blob::DEFAULT_MAX_BLOB_BYTES,
            token_ttl_secs: ran_core::auth::DEFAULT_TOKEN_TTL_MILLIS / 1000,
            uploads_per_ip: 4,
        }
    }
}

fn env_parse<T: std::str::FromStr>(
    get: &impl Fn(&str) -> Option<String>,
    key: &str,
) -> anyhow::Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match get(key) {
        None => Ok(None),
        Some(raw) => raw
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| anyhow::anyhow!("{key}={raw:?}: {e}")),
    }
}

impl ServerConfig {
    pub fn from_env() -> anyhow::Result<Self> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> anyhow::Result<Self> {
        let d = Self::default();
        let cfg = Self {
            listen: env_parse(&get, "RAN_LISTEN")?.unwrap_or(d.listen),
            data_dir: get("RAN_DATA_DIR").map(PathBuf::from).unwrap_or(d.data_dir),
            max_blob_bytes: env_parse(&get, "RAN_MAX_BLOB_BYTES")?.unwrap_or(d.max_blob_bytes),
            token_ttl_secs: env_parse(&get, "RAN_TOKEN_TTL_SECS")?.unwrap_or(d.token_ttl_secs),
            uploads_per_ip: env_parse(&get, "RAN_UPLOADS_PER_IP")?.unwrap_or(d.uploads_per_ip),
        };
        anyhow::ensure!(cfg.token_ttl_secs > 0, "RAN_TOKEN_TTL_SECS must be positive");
        anyhow::ensure!(cfg.uploads_per_ip > 0, "RAN_UPLOADS_PER_IP must be positive");
        Ok(cfg)
    }

    pub fn registry_config(&self) -> Config {
        let mut c = Config::new(&self.data_dir);
        c.max_blob_bytes = self.max_blob_bytes;
        c.token_ttl_millis = self.token_ttl_secs * 1000;
        c
    }
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> anyhow::Result<()> {
    let app = router(state).into_make_service_with_connect_info::<SocketAddr>();
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await
        .context("http server failed")
}
