use std::sync::Arc;
use std::time::Duration;

use slowvoice_core::clock::SystemClock;
use slowvoice_core::Board;
use tokio::net::TcpListener;

use crate::api::router;
use crate::config::ServiceConfig;
use crate::mailers;
use crate::state::{AppState, Paths};

/// Builds the application state from a configuration. Fails on any configuration problem.
pub fn build(config: &ServiceConfig) -> Result<AppState, String> {
    let loaded = config.load_all().map_err(|e| e.to_string())?;
    let mailer = mailers::from_config(&config.mailer, |p| config.resolve(p)).map_err(|e| e.to_string())?;
    let board = Board::new(loaded.board, loaded.whitelist, Arc::new(SystemClock), Arc::from(mailer))
        .map_err(|e| e.to_string())?;
    let paths = Paths {
        state: config.state_path(),
        whitelist: config.whitelist_path(),
        moderators: config.moderators_path(),
    };
    AppState::with_files(Arc::new(board), loaded.moderators, paths).map_err(|e| e.to_string())
}

pub async fn serve(config: ServiceConfig) -> Result<(), String> {
    let state = build(&config)?;
    let listener = TcpListener::bind(config.listen)
        .await
        .map_err(|e| format!("cannot listen on {}: {e}", config.listen))?;
    tracing::info!(listen = %config.listen, next_release = %state.board().next_release(), "serving");

    let ticker = state.clone();
    let period = Duration::from_secs(config.tick_seconds);
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(period);
        loop {
            interval.tick().await;
            if let Err(e) = ticker.tick() {
                tracing::error!(error = %e, "release tick failed");
            }
        }
    });

    let app = router(state.clone());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())?;
    state.persist();
    Ok(())
}
