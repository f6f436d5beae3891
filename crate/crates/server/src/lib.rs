//! HTTP tracking server.
//!
//! All endpoints live under `/api/v1` and speak UTF-8 JSON using the
//! canonical serialization from `qtrack-core`. Errors always have the
//! [`ApiError`] shape.

mod error;
mod handlers;

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::{DefaultBodyLimit, Request, State};
use axum::http::header::AUTHORIZATION;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use qtrack_storage::Store;
use tokio::sync::oneshot;

pub use error::{ApiError, ErrorCode};
pub use handlers::{
    CreateExperiment, CreateRun, LogMetric, LogMetricBatch, SearchRequest, SetKeyValue, UpdateRun,
};

pub const DEFAULT_ADDR: &str = "127.0.0.1:5600";
pub const STORE_DIR_ENV: &str = "QTRACK_STORE_DIR";
pub const AUTH_TOKEN_ENV: &str = "QTRACK_AUTH_TOKEN";

const MAX_BODY_BYTES: usize = 512 * 1024 * 1024;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub auth_token: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct ServerConfig {
    /// Bearer token every API request must present; `None` leaves the server open.
    pub auth_token: Option<String>,
    /// Static dashboard assets served under `/ui/`.
    pub ui_dir: Option<PathBuf>,
}

pub fn router(store: Arc<Store>, config: &ServerConfig) -> Router {
    let state = AppState {
        store,
        auth_token: config.auth_token.clone(),
    };
    let api = Router::new()
        .route(
            "/experiments",
            post(handlers::create_experiment).get(handlers::get_experiments),
        )
        .route("/runs", post(handlers::create_run))
        .route("/runs/search", post(handlers::search))
        .route("/runs/{run_id}", get(handlers::get_run).patch(handlers::update_run))
        .route("/runs/{run_id}/params", post(handlers::log_param))
        .route("/runs/{run_id}/metrics", post(handlers::log_metric))
        .route("/runs/{run_id}/metrics/batch", post(handlers::log_metric_batch))
        .route("/runs/{run_id}/tags", post(handlers::set_tag))
        .route("/runs/{run_id}/provenance", post(handlers::log_provenance))
        .route("/runs/{run_id}/artifacts", get(handlers::list_artifacts))
        .route(
            "/runs/{run_id}/artifacts/{*path}",
            get(handlers::get_artifact).put(handlers::put_artifact),
        )
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES));

    let mut app = Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .nest("/api/v1", api);
    if let Some(dir) = &config.ui_dir {
        app = app.nest_service("/ui", tower_http::services::ServeDir::new(dir));
    }
    app.fallback(no_route)
        .method_not_allowed_fallback(no_route)
        .with_state(state)
}

async fn no_route() -> ApiError {
    ApiError::not_found("no such endpoint")
}

async fn require_token(State(state): State<AppState>, req: Request, next: Next) -> Response {
    if let Some(expected) = &state.auth_token {
        let presented = req
            .headers()
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if presented != Some(expected.as_str()) {
            return ApiError::new(ErrorCode::Unauthenticated, "missing or invalid bearer token").into_response();
        }
    }
    next.run(req).await
}

/// Serve until `shutdown` resolves, then drain in-flight requests.
pub async fn serve(
    listener: tokio::net::TcpListener,
    store: Arc<Store>,
    config: ServerConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(store, &config);
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// Resolves on Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    tracing::info!("shutting down");
}

/// A server running on its own runtime thread, for embedding and tests.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    /// Bind `addr` (use port 0 for an ephemeral port) and serve `store`.
    pub fn spawn(store: Store, addr: &str, config: ServerConfig) -> std::io::Result<ServerHandle> {
        let listener = std::net::TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let (stop, stopped) = oneshot::channel::<()>();
        let store = Arc::new(store);
        let thread = std::thread::Builder::new()
            .name(format!("qtrack-server-{addr}"))
            .spawn(move || {
                let rt = tokio::runtime::Builder::new_multi_thread()
                    .worker_threads(4)
                    .enable_all()
                    .build()?;
                rt.block_on(async move {
                    let listener = tokio::net::TcpListener::from_std(listener)?;
                    serve(listener, store, config, async {
                        let _ = stopped.await;
                    })
                    .await
                })
            })?;
        Ok(ServerHandle {
            addr,
            stop: Some(stop),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stop serving and wait until the store has been released.
    pub fn shutdown(mut self) -> std::io::Result<()> {
        self.stop_and_join()
    }

    fn stop_and_join(&mut self) -> std::io::Result<()> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop_and_join();
    }
}
