//! HTTP service over the medlens analysis core.
//!
//! Corpora are stored on disk and analysed once per process. Exploration
//! sessions live in memory and are snapshotted to disk periodically.

pub mod api;
pub mod config;
pub mod session;
pub mod state;

use std::sync::Arc;
use std::time::Duration;

use tower_http::services::ServeDir;

pub use api::router;
pub use config::ServiceConfig;
pub use state::AppState;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] medlens_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Full application: API routes plus the optional static bundle.
pub fn app(state: Arc<AppState>) -> axum::Router {
    let static_dir = state.config.server.static_dir.clone();
    let api = router(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Restores sessions, serves until Ctrl-C and writes a final snapshot.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = Arc::new(AppState::new(config));
    let restore = state.clone();
    let restored = tokio::task::spawn_blocking(move || restore.restore_sessions())
        .await
        .map_err(|e| ServiceError::Io(std::io::Error::other(e)))??;
    if restored > 0 {
        log::info!("restored {restored} sessions");
    }

    let interval = Duration::from_secs(state.config.server.snapshot_interval_secs);
    let snapshotter = state.clone();
    let ticker = tokio::spawn(async move {
        let mut tick = tokio::time::interval(interval);
        tick.tick().await;
        loop {
            tick.tick().await;
            if let Err(e) = snapshotter.snapshot_sessions().await {
                log::warn!("session snapshot failed: {e}");
            }
        }
    });

    let listener = tokio::net::TcpListener::bind(&state.config.server.listen).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app(state.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    ticker.abort();
    state.snapshot_sessions().await?;
    Ok(())
}
