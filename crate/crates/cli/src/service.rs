//! HTTP service over a loaded session.
//!
//! Routes: `GET /api/meta`, `POST /api/filter`, `GET /api/mesh`. Every
//! route answers 503 until a session is loaded.

use std::net::SocketAddr;
use std::sync::{Arc, OnceLock};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tower_http::cors::CorsLayer;
use tvspec_core::{Error, FilterSpec};

use crate::session::{payload_digest, Rendered, Session};

pub const DIGEST_HEADER: &str = "x-content-digest";
pub const IDENTITY_HEADER: &str = "x-identity";

#[derive(Clone)]
pub struct AppState {
    session: Arc<OnceLock<Arc<Session>>>,
    peak_threshold: f64,
}

impl AppState {
    pub fn new(peak_threshold: f64) -> Self {
        Self { session: Arc::new(OnceLock::new()), peak_threshold }
    }

    pub fn with_session(session: Session, peak_threshold: f64) -> Self {
        let s = Self::new(peak_threshold);
        s.load(session);
        s
    }

    /// Installs the session; later calls are ignored.
    pub fn load(&self, session: Session) -> bool {
        self.session.set(Arc::new(session)).is_ok()
    }

    fn get(&self) -> Option<Arc<Session>> {
        self.session.get().cloned()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/meta", get(meta))
        .route("/api/filter", post(filter))
        .route("/api/mesh", get(mesh))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

fn error(status: StatusCode, msg: impl std::fmt::Display) -> Response {
    (status, Json(json!({ "error": msg.to_string() }))).into_response()
}

fn not_loaded() -> Response {
    error(StatusCode::SERVICE_UNAVAILABLE, "no decomposition loaded yet")
}

fn binary(bytes: Vec<u8>, identity: bool) -> Response {
    let digest = payload_digest(&bytes);
    let mut res = bytes.into_response();
    let h = res.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/octet-stream"));
    h.insert(DIGEST_HEADER, HeaderValue::from_str(&digest).expect("hex is a valid header"));
    h.insert(IDENTITY_HEADER, HeaderValue::from_static(if identity { "true" } else { "false" }));
    res
}

async fn meta(State(state): State<AppState>) -> Response {
    match state.get() {
        Some(s) => Json(s.meta(state.peak_threshold)).into_response(),
        None => not_loaded(),
    }
}

async fn mesh(State(state): State<AppState>) -> Response {
    match state.get() {
        Some(s) => binary(s.original_bytes().to_vec(), true),
        None => not_loaded(),
    }
}

async fn filter(State(state): State<AppState>, body: Bytes) -> Response {
    let Some(session) = state.get() else {
        return not_loaded();
    };
    let spec: FilterSpec = match serde_json::from_slice(&body) {
        Ok(s) => s,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed filter: {e}")),
    };
    if let Err(e) = spec.validate() {
        return error(StatusCode::BAD_REQUEST, e);
    }
    if spec.mask_path.is_some() {
        return error(StatusCode::BAD_REQUEST, "maskPath is not accepted here; send the mask inline");
    }
    let work = tokio::task::spawn_blocking(move || {
        let rendered = session.render(&spec)?;
        let identity = rendered == Rendered::Original;
        Ok::<_, Error>((session.encode(&rendered), identity))
    });
    match work.await {
        Ok(Ok((bytes, identity))) => binary(bytes, identity),
        Ok(Err(e @ (Error::FilterShapeMismatch(_) | Error::InvalidSignal(_)))) => {
            error(StatusCode::UNPROCESSABLE_ENTITY, e)
        }
        Ok(Err(e @ Error::InvalidFilter(_))) => error(StatusCode::BAD_REQUEST, e),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

/// Binds `addr`, then loads the session produced by `load` on a blocking
/// thread while already answering (503) requests.
pub async fn run<F>(addr: SocketAddr, peak_threshold: f64, load: F) -> anyhow::Result<()>
where
    F: FnOnce() -> anyhow::Result<Session> + Send + 'static,
{
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    let state = AppState::new(peak_threshold);
    let loader = state.clone();
    let loading = tokio::task::spawn_blocking(move || {
        let session = load()?;
        loader.load(session);
        log::info!("session loaded");
        Ok::<_, anyhow::Error>(())
    });
    let server = tokio::spawn(async move {
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    });
    if let Err(e) = loading.await? {
        server.abort();
        return Err(e);
    }
    server.await??;
    Ok(())
}
