//! JSON/TSV HTTP API over an [`AnnotationStore`].
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/tasks/next?annotator=ID` | claim a task: `{"task": {...}}` or `{"task": null}` |
//! | POST | `/api/tasks/{sample_id}/label` | `{"annotator", "sentiment_category", "regard_category"}` |
//! | GET | `/api/progress` | counts |
//! | GET | `/api/export.tsv` | raw annotation TSV |
//! | GET | `/api/guidelines` | guideline text |
//! | POST | `/api/seal` | stop accepting labels |
//!
//! Errors are `{"error": "..."}` with 400 (bad input), 404 (unknown sample or
//! annotator) or 409 (sealed batch, no free slot).

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{AnnotationStore, Progress, ServiceError, Task};
use crate::annotation::{guidelines, CategoryValue};

pub type SharedStore = Arc<Mutex<AnnotationStore>>;

#[derive(Debug, Deserialize)]
pub struct NextQuery {
    pub annotator: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NextResponse {
    pub task: Option<Task>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelRequest {
    pub annotator: String,
    pub sentiment_category: String,
    pub regard_category: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelResponse {
    pub sample_id: String,
    pub annotator: String,
    pub status: String,
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::UnknownAnnotator(_) | ServiceError::UnknownSample(_) => StatusCode::NOT_FOUND,
            ServiceError::Sealed | ServiceError::NoOpenSlot(_) => StatusCode::CONFLICT,
            ServiceError::InvalidCategory { .. } => StatusCode::BAD_REQUEST,
            ServiceError::Persistence(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn lock(store: &SharedStore) -> std::sync::MutexGuard<'_, AnnotationStore> {
    store.lock().unwrap_or_else(|p| p.into_inner())
}

fn category(field: &str, value: &str) -> Result<CategoryValue, ServiceError> {
    value.parse().map_err(|_| ServiceError::InvalidCategory {
        field: field.to_string(),
        value: format!("{value}; expected one of {}", CategoryValue::vocabulary()),
    })
}

async fn next_task(State(store): State<SharedStore>, Query(q): Query<NextQuery>) -> Result<Json<NextResponse>, ApiError> {
    let annotator = q
        .annotator
        .filter(|a| !a.is_empty())
        .ok_or_else(|| ApiError(StatusCode::BAD_REQUEST, "missing query parameter `annotator`".into()))?;
    let task = lock(&store).next_task(&annotator, now_ms())?;
    Ok(Json(NextResponse { task }))
}

async fn submit_label(
    State(store): State<SharedStore>,
    Path(sample_id): Path<String>,
    body: Result<Json<LabelRequest>, axum::extract::rejection::JsonRejection>,
) -> Result<Json<LabelResponse>, ApiError> {
    let Json(req) = body.map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.body_text()))?;
    let sentiment = category("sentiment_category", &req.sentiment_category)?;
    let regard = category("regard_category", &req.regard_category)?;
    lock(&store).submit_label(&req.annotator, &sample_id, sentiment, regard, now_ms())?;
    Ok(Json(LabelResponse {
        sample_id,
        annotator: req.annotator,
        status: "submitted".into(),
    }))
}

async fn progress(State(store): State<SharedStore>) -> Json<Progress> {
    Json(lock(&store).progress())
}

async fn export(State(store): State<SharedStore>) -> impl IntoResponse {
    let body = lock(&store).export_raw();
    ([(header::CONTENT_TYPE, "text/tab-separated-values; charset=utf-8")], body)
}

async fn guideline_text() -> impl IntoResponse {
    Json(guidelines())
}

async fn seal(State(store): State<SharedStore>) -> Result<Json<serde_json::Value>, ApiError> {
    lock(&store).seal()?;
    Ok(Json(json!({ "sealed": true })))
}

pub fn router(store: SharedStore) -> Router {
    Router::new()
        .route("/api/tasks/next", get(next_task))
        .route("/api/tasks/{sample_id}/label", post(submit_label))
        .route("/api/progress", get(progress))
        .route("/api/export.tsv", get(export))
        .route("/api/guidelines", get(guideline_text))
        .route("/api/seal", post(seal))
        .with_state(store)
}

/// Serve until ctrl-c.
pub async fn serve(store: SharedStore, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// A router served on a background thread; shut down on drop.
pub struct BackgroundServer {
    pub addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl BackgroundServer {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Serve `router` on `addr` (port 0 picks a free port) from a new thread.
pub fn spawn_router(router: Router, addr: SocketAddr) -> std::io::Result<BackgroundServer> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let listener = runtime.block_on(tokio::net::TcpListener::bind(addr))?;
    let addr = listener.local_addr()?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        runtime.block_on(async move {
            let _ = axum::serve(listener, router)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
    });
    Ok(BackgroundServer {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
