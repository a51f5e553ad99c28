//! HTTP/JSON access to amendment sessions. Sessions live in memory; each
//! one is guarded by its own lock so mutations of a session are serialized
//! while different sessions proceed independently.

mod error;
mod routes;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::Router;
use choreo_core::logic::{Solver, SolverConfig};
use choreo_core::session::AmendSession;
use tokio::net::TcpListener;

pub use error::ApiError;

pub const DEFAULT_BODY_LIMIT: usize = 1 << 20;

#[derive(Clone, Debug)]
pub struct ApiConfig {
    pub solver: SolverConfig,
    /// Largest accepted request body in bytes.
    pub body_limit: usize,
    /// Origins allowed to call the API from a browser.
    pub cors_origins: Vec<String>,
    /// Where session snapshots are written on shutdown.
    pub snapshot_dir: Option<PathBuf>,
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig {
            solver: SolverConfig::default(),
            body_limit: DEFAULT_BODY_LIMIT,
            cors_origins: vec!["http://localhost:5173".to_string(), "http://127.0.0.1:5173".to_string()],
            snapshot_dir: None,
        }
    }
}

pub type SessionHandle = Arc<RwLock<AmendSession>>;

pub struct AppState {
    pub config: ApiConfig,
    pub solver: Arc<dyn Solver>,
    sessions: RwLock<HashMap<String, SessionHandle>>,
}

impl AppState {
    pub fn new(config: ApiConfig) -> Arc<Self> {
        let solver = config.solver.build();
        Arc::new(AppState { config, solver, sessions: RwLock::new(HashMap::new()) })
    }

    pub fn session(&self, id: &str) -> Option<SessionHandle> {
        self.sessions.read().expect("session table lock").get(id).cloned()
    }

    fn insert(&self, session: AmendSession) -> String {
        let id = uuid::Uuid::new_v4().to_string();
        self.sessions.write().expect("session table lock").insert(id.clone(), Arc::new(RwLock::new(session)));
        id
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().expect("session table lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Writes one JSON snapshot per session into `dir`.
    pub fn write_snapshots(&self, dir: &std::path::Path) -> std::io::Result<usize> {
        std::fs::create_dir_all(dir)?;
        let mut written = 0;
        for id in self.session_ids() {
            let Some(handle) = self.session(&id) else { continue };
            let snapshot = handle.read().expect("session lock").snapshot();
            let json = serde_json::to_vec_pretty(&snapshot).map_err(std::io::Error::other)?;
            std::fs::write(dir.join(format!("{id}.json")), json)?;
            written += 1;
        }
        Ok(written)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    routes::router(state)
}

/// Serves until `shutdown` resolves, then writes snapshots if configured.
pub async fn serve(
    listener: TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state.clone())).with_graceful_shutdown(shutdown).await?;
    if let Some(dir) = &state.config.snapshot_dir {
        let n = state.write_snapshots(dir)?;
        log::info!("wrote {n} session snapshot(s) to {}", dir.display());
    }
    Ok(())
}
