use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ApiResult};
use crate::session::{Answer, Progress, QueryView, ResultView, SessionRecord, SessionSpec};
use crate::store::Store;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub outcome: Answer,
    /// The `query_id` of the comparison being answered. Optional; when
    /// present a stale id is rejected instead of answering the next query.
    #[serde(default)]
    pub query_id: Option<usize>,
}

type AppState = Arc<Store>;

pub fn router(store: Arc<Store>) -> Router {
    let limit = store.config().body_limit;
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", post(create))
        .route("/sessions/{id}", axum::routing::delete(remove))
        .route("/sessions/{id}/query", get(query))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/stop", post(stop))
        .route("/sessions/{id}/progress", get(progress))
        .route("/sessions/{id}/result", get(result))
        .route("/sessions/{id}/record", get(record))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(store)
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("invalid request body: {e}")))
}

/// Session work can stream many tuples, so it runs off the async workers.
async fn blocking<R: Send + 'static>(f: impl FnOnce() -> ApiResult<R> + Send + 'static) -> ApiResult<R> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(format!("request task failed: {e}")))?
}

async fn create(State(store): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<Created>)> {
    let spec: SessionSpec = parse(&body)?;
    let (id, progress) = blocking(move || store.create(spec)).await?;
    Ok((StatusCode::CREATED, Json(Created { id, progress })))
}

async fn query(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<QueryView>> {
    blocking(move || store.with(&id, false, |s| Ok(s.query()))).await.map(Json)
}

async fn answer(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Progress>> {
    let req: AnswerRequest = parse(&body)?;
    blocking(move || {
        store.with(&id, true, |s| {
            s.answer(req.outcome, req.query_id)?;
            Ok(s.progress())
        })
    })
    .await
    .map(Json)
}

async fn stop(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Progress>> {
    blocking(move || {
        store.with(&id, true, |s| {
            s.stop()?;
            Ok(s.progress())
        })
    })
    .await
    .map(Json)
}

async fn progress(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Progress>> {
    blocking(move || store.with(&id, false, |s| Ok(s.progress()))).await.map(Json)
}

async fn result(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ResultView>> {
    blocking(move || store.with(&id, false, |s| s.result())).await.map(Json)
}

async fn record(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionRecord>> {
    blocking(move || store.with(&id, false, |s| Ok(s.record()))).await.map(Json)
}

async fn remove(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    blocking(move || store.remove(&id)).await?;
    Ok(StatusCode::NO_CONTENT)
}
