//! HTTP front end: claim evaluation, incremental ingestion and status.
//!
//! Claims are evaluated concurrently against an immutable store snapshot.
//! Ingestion builds a new store from a copy and swaps it in; only one write
//! runs at a time and a concurrent write request gets 409.

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use claimgraph_core::linking::AnnotateStats;
use claimgraph_core::{
    annotate_sections, map_label, ClaimEvaluation, EvalStatus, FeverLabel, GraphStore,
    LabelThresholds, SegmentationConfig,
};
use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::ingest::{ingest_str, IngestStats, MalformedRecord};
use crate::snapshot::save_snapshot;

pub struct AppState {
    engine: Engine,
    store: RwLock<Option<Arc<GraphStore>>>,
    writing: AtomicBool,
    store_path: Option<PathBuf>,
    segmentation: SegmentationConfig,
    thresholds: LabelThresholds,
}

impl AppState {
    /// `store_path`, when set, receives a snapshot after every ingestion.
    pub fn new(engine: Engine, store_path: Option<PathBuf>) -> Self {
        Self {
            engine,
            store: RwLock::new(None),
            writing: AtomicBool::new(false),
            store_path,
            segmentation: SegmentationConfig::default(),
            thresholds: LabelThresholds::default(),
        }
    }

    pub fn with_segmentation(mut self, cfg: SegmentationConfig) -> Self {
        self.segmentation = cfg;
        self
    }

    pub fn with_thresholds(mut self, t: LabelThresholds) -> Self {
        self.thresholds = t;
        self
    }

    /// Makes a store available to requests.
    pub fn install(&self, store: GraphStore) {
        *self.store.write().unwrap_or_else(|e| e.into_inner()) = Some(Arc::new(store));
    }

    fn current(&self) -> Option<Arc<GraphStore>> {
        self.store.read().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

#[derive(Debug, Deserialize)]
struct ClaimRequest {
    claim: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClaimResponse {
    #[serde(flatten)]
    pub evaluation: ClaimEvaluation,
    pub label: FeverLabel,
    pub degraded: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IngestResponse {
    #[serde(flatten)]
    pub stats: IngestStats,
    pub annotated: AnnotateStats,
    pub malformed: Vec<MalformedRecord>,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": message.into() }))).into_response()
}

fn not_loaded() -> Response {
    error(StatusCode::SERVICE_UNAVAILABLE, "store not loaded")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/claims", post(claims))
        .route("/ingest", post(ingest))
        .route("/stats", get(stats))
        .route("/healthz", get(healthz))
        .with_state(state)
}

async fn claims(State(st): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: ClaimRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed body: {e}")),
    };
    if req.claim.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "claim is empty");
    }
    let Some(store) = st.current() else {
        return not_loaded();
    };
    let task = tokio::task::spawn_blocking(move || {
        st.engine
            .evaluate(&req.claim, &store)
            .map(|out| (out, st.engine.is_strict(), st.thresholds))
    });
    match task.await {
        Ok(Ok((out, strict, thresholds))) => {
            let status = if strict && out.evaluation.status == EvalStatus::ProviderUnavailable {
                StatusCode::SERVICE_UNAVAILABLE
            } else {
                StatusCode::OK
            };
            let body = ClaimResponse {
                label: map_label(&out.evaluation, &thresholds),
                evaluation: out.evaluation,
                degraded: out.degraded,
            };
            (status, Json(body)).into_response()
        }
        Ok(Err(e)) => error(StatusCode::BAD_REQUEST, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

/// Clears the single-writer flag when the write finishes or panics.
struct WriteGuard(Arc<AppState>);

impl Drop for WriteGuard {
    fn drop(&mut self) {
        self.0.writing.store(false, Ordering::Release);
    }
}

async fn ingest(State(st): State<Arc<AppState>>, body: Bytes) -> Response {
    let Ok(text) = String::from_utf8(body.to_vec()) else {
        return error(StatusCode::BAD_REQUEST, "body is not UTF-8");
    };
    if st.current().is_none() {
        return not_loaded();
    }
    if st
        .writing
        .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
        .is_err()
    {
        return error(StatusCode::CONFLICT, "a write is already in progress");
    }
    let guard = WriteGuard(st);
    let task =
        tokio::task::spawn_blocking(move || -> Result<IngestResponse, (StatusCode, String)> {
            let st = &guard.0;
            let base = st
                .current()
                .ok_or((StatusCode::SERVICE_UNAVAILABLE, "store not loaded".into()))?;
            let mut next = GraphStore::clone(&base);
            let report = ingest_str(&mut next, &text, &st.segmentation)
                .map_err(|e| (StatusCode::BAD_REQUEST, e.to_string()))?;
            let annotated = annotate_sections(
                &mut next,
                st.engine.linker(),
                st.engine.linker_config(),
                &report.new_sections,
            )
            .map_err(|e| (StatusCode::SERVICE_UNAVAILABLE, e.to_string()))?;
            if let Some(path) = &st.store_path {
                save_snapshot(&next, path)
                    .map_err(|e| (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
            }
            st.install(next);
            tracing::info!(
                articles = report.stats.articles,
                sections = report.stats.sections,
                "ingested"
            );
            Ok(IngestResponse {
                stats: report.stats,
                annotated,
                malformed: report.malformed,
            })
        });
    match task.await {
        Ok(Ok(resp)) => Json(resp).into_response(),
        Ok(Err((status, msg))) => error(status, msg),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn stats(State(st): State<Arc<AppState>>) -> Response {
    match st.current() {
        Some(store) => Json(store.stats()).into_response(),
        None => not_loaded(),
    }
}

async fn healthz(State(st): State<Arc<AppState>>) -> Response {
    if st.current().is_none() {
        return not_loaded();
    }
    let probe = st.clone();
    match tokio::task::spawn_blocking(move || probe.engine.health()).await {
        Ok(Ok(())) => Json(serde_json::json!({ "status": "ok" })).into_response(),
        Ok(Err(e)) => error(StatusCode::SERVICE_UNAVAILABLE, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

/// Serves until the future `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}
