//! HTTP routes. Handlers lock the session, then do the computation on the
//! blocking pool while holding the lock, so updates to one session apply in
//! a single serial order.

use std::io::Cursor;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use medlens_core::extraction::{AnnotatedDocument, Entity};
use medlens_core::focus::{FocusExport, FocusKind, FocusTarget};
use medlens_core::pipeline::{SearchPayload, SpacePayload, StarMapPayload};
use medlens_core::tree::TreeExport;
use medlens_core::Error;
use serde::{Deserialize, Serialize};

use crate::session::{validate_theta, Session, SessionSummary, StarMapSpec};
use crate::state::{AppState, IngestSummary};

pub struct ApiError(pub Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

pub fn status_of(e: &Error) -> StatusCode {
    match e {
        Error::InvalidInput(_) | Error::Parse { .. } | Error::Json(_) => StatusCode::BAD_REQUEST,
        Error::NotFound(_) => StatusCode::NOT_FOUND,
        Error::Conflict(_) => StatusCode::CONFLICT,
        Error::Infeasible(_) => StatusCode::UNPROCESSABLE_ENTITY,
        Error::Provider(_) => StatusCode::BAD_GATEWAY,
        Error::NonFinite(_) | Error::DimensionMismatch(..) | Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = status_of(&self.0);
        if status.is_server_error() {
            log::error!("{}", self.0);
        }
        (status, Json(ErrorBody { error: self.0.to_string() })).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> medlens_core::Result<T> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(Error::Io(std::io::Error::other(e))))?
        .map_err(ApiError)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/corpora", post(ingest).get(list_corpora))
        .route("/api/corpora/{id}/search", get(search))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/space", post(space))
        .route("/api/sessions/{id}/starmap", post(starmap))
        .route("/api/sessions/{id}/tree", post(tree))
        .route("/api/sessions/{id}/tree/add", post(tree_add))
        .route("/api/sessions/{id}/focus", post(focus))
        .route("/api/documents/{id}", get(document))
        .with_state(state)
}

async fn ingest(State(state): State<Arc<AppState>>, body: Bytes) -> Result<(StatusCode, Json<IngestSummary>), ApiError> {
    let summary = blocking(move || state.ingest(Cursor::new(body))).await?;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn list_corpora(State(state): State<Arc<AppState>>) -> ApiResult<Vec<String>> {
    Ok(Json(blocking(move || state.corpus_ids()).await?))
}

#[derive(Deserialize)]
struct SearchQuery {
    #[serde(default)]
    q: String,
}

async fn search(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(query): Query<SearchQuery>,
) -> ApiResult<SearchPayload> {
    let payload = blocking(move || {
        let corpus = state.corpus(&id)?;
        let keywords: Vec<&str> = query.q.split_whitespace().collect();
        corpus.search(&keywords)
    })
    .await?;
    Ok(Json(payload))
}

#[derive(Deserialize)]
struct CreateSession {
    corpus_id: String,
    #[serde(default)]
    document_ids: Vec<String>,
    theta: Option<f64>,
    max_subgraph_size: Option<usize>,
    seed: Option<u64>,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionSummary>), ApiError> {
    let summary = blocking(move || {
        let corpus = state.corpus(&req.corpus_id)?;
        let analysis = &state.config.analysis;
        let session = Session::new(
            state.next_session_id(),
            &corpus,
            req.document_ids,
            req.theta.unwrap_or(analysis.theta),
            req.max_subgraph_size.unwrap_or(analysis.max_subgraph_size),
            req.seed.unwrap_or(0),
            now(),
        )?;
        let summary = session.summary();
        state.insert_session(session);
        Ok(summary)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<SessionSummary> {
    let handle = state.session(&id)?;
    let s = handle.lock().await;
    Ok(Json(s.summary()))
}

#[derive(Deserialize, Default)]
struct SpaceRequest {
    theta: Option<f64>,
    seed: Option<u64>,
}

async fn space(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Option<Json<SpaceRequest>>,
) -> ApiResult<SpacePayload> {
    let req = body.map(|b| b.0).unwrap_or_default();
    let mut session = state.session(&id)?.lock_owned().await;
    let payload = blocking(move || {
        let theta = req.theta.unwrap_or(session.theta);
        validate_theta(theta)?;
        let seed = req.seed.unwrap_or(session.seed);
        if session.selected_document_ids.is_empty() {
            return Err(Error::invalid("session has no selected documents"));
        }
        let corpus = state.corpus(&session.corpus_id)?;
        let payload = corpus.space(&session.selected_document_ids, theta, seed, &state.config.analysis.space)?;
        session.theta = theta;
        session.seed = seed;
        session.dirty = true;
        Ok(payload)
    })
    .await?;
    Ok(Json(payload))
}

#[derive(Deserialize, Default)]
struct StarMapRequest {
    document_ids: Option<Vec<String>>,
    theta: Option<f64>,
    max_subgraph_size: Option<usize>,
    seed: Option<u64>,
}

async fn starmap(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Option<Json<StarMapRequest>>,
) -> ApiResult<StarMapPayload> {
    let req = body.map(|b| b.0).unwrap_or_default();
    let mut session = state.session(&id)?.lock_owned().await;
    let payload = blocking(move || {
        let spec = StarMapSpec {
            document_ids: req.document_ids.unwrap_or_else(|| session.selected_document_ids.clone()),
            theta: req.theta.unwrap_or(session.theta),
            max_subgraph_size: req.max_subgraph_size.unwrap_or(session.max_subgraph_size),
            seed: req.seed.unwrap_or(session.seed),
        };
        if spec.document_ids.is_empty() {
            return Err(Error::invalid("no documents selected"));
        }
        let corpus = state.corpus(&session.corpus_id)?;
        let view = session.run_starmap(&corpus, &state.config.analysis, spec)?;
        Ok(view.payload(session.max_subgraph_size))
    })
    .await?;
    Ok(Json(payload))
}

#[derive(Deserialize)]
struct TreeRequest {
    part_ids: Vec<usize>,
}

async fn tree(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<TreeRequest>,
) -> ApiResult<TreeExport> {
    let mut session = state.session(&id)?.lock_owned().await;
    let payload = blocking(move || {
        let corpus = state.corpus(&session.corpus_id)?;
        Ok(session.build_tree(&corpus, &state.config.analysis, &req.part_ids)?.export())
    })
    .await?;
    Ok(Json(payload))
}

#[derive(Deserialize)]
struct TreeAddRequest {
    mes_ids: Vec<String>,
}

async fn tree_add(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<TreeAddRequest>,
) -> ApiResult<TreeExport> {
    let mut session = state.session(&id)?.lock_owned().await;
    let payload = blocking(move || {
        let corpus = state.corpus(&session.corpus_id)?;
        Ok(session.add_to_tree(&corpus, &req.mes_ids)?.export())
    })
    .await?;
    Ok(Json(payload))
}

#[derive(Deserialize)]
struct FocusRequest {
    kind: FocusKind,
    me: Option<Entity>,
    mes: Option<String>,
    scope: Option<Vec<String>>,
    h_t: Option<f64>,
}

async fn focus(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<FocusRequest>,
) -> ApiResult<FocusExport> {
    let session = state.session(&id)?.lock_owned().await;
    let payload = blocking(move || {
        let scope = match req.scope {
            Some(s) => s,
            None => session.focus_scope()?,
        };
        let target = FocusTarget {
            kind: req.kind,
            me: req.me,
            mes: req.mes,
            scope,
        };
        let corpus = state.corpus(&session.corpus_id)?;
        corpus.focus(&target, req.h_t.unwrap_or(state.config.analysis.h_t))
    })
    .await?;
    Ok(Json(payload))
}

#[derive(Deserialize)]
struct DocumentQuery {
    corpus: Option<String>,
}

async fn document(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<DocumentQuery>,
) -> ApiResult<AnnotatedDocument> {
    let payload = blocking(move || {
        let candidates = match q.corpus {
            Some(c) => vec![c],
            None => state.corpus_ids()?,
        };
        for cid in candidates {
            let corpus = state.corpus(&cid)?;
            if corpus.snapshot.document(&id).is_some() {
                return corpus.document(&id);
            }
        }
        Err(Error::not_found(format!("document {id}")))
    })
    .await?;
    Ok(Json(payload))
}

fn now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
