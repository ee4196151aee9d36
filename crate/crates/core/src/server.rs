//! HTTP service over pipeline output directories: map artifacts, polygon
//! selection and the agent gateway.

use std::collections::{BTreeMap, HashSet};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::agents::{handle_query, AgentError, AgentTools, ContextPayload, FieldError};
use crate::bundling::edges_to_json;
use crate::corpus::{write_tsv, Article};
use crate::dataset::{Dataset, MANIFEST_FILE};
use crate::labeling::labels_to_json;
use crate::model::ModelClient;

pub const POINTS_MAGIC: &[u8; 4] = b"PTS1";
pub const ARTICLE_PAGE_SIZE: usize = 100;

/// One registered dataset with its response bodies rendered once at load.
pub struct Served {
    pub dataset: Dataset,
    points_tsv: Bytes,
    points_bin: Bytes,
    clusters: Bytes,
    labels: Bytes,
    edges: Bytes,
}

/// `PTS1` column block: magic, u32 n, then x\[n\] f32, y\[n\] f32,
/// year\[n\] u16 (0 when unknown), cluster\[n\] i32 (−1 noise), size\[n\] f32,
/// all little-endian.
pub fn encode_points(dataset: &Dataset) -> Vec<u8> {
    let arts = dataset.corpus.articles();
    let n = arts.len();
    let mut out = Vec::with_capacity(8 + n * 18);
    out.extend_from_slice(POINTS_MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for i in 0..n {
        out.extend_from_slice(&(dataset.spatial.coord(i)[0] as f32).to_le_bytes());
    }
    for i in 0..n {
        out.extend_from_slice(&(dataset.spatial.coord(i)[1] as f32).to_le_bytes());
    }
    for a in arts {
        let y = a.year().and_then(|y| u16::try_from(y).ok()).unwrap_or(0);
        out.extend_from_slice(&y.to_le_bytes());
    }
    for &c in &dataset.point_cluster {
        out.extend_from_slice(&(c as i32).to_le_bytes());
    }
    for a in arts {
        out.extend_from_slice(&(a.size as f32).to_le_bytes());
    }
    out
}

/// Columns of a decoded `PTS1` block.
#[derive(Debug, Clone, PartialEq)]
pub struct PointColumns {
    pub x: Vec<f32>,
    pub y: Vec<f32>,
    pub year: Vec<u16>,
    pub cluster: Vec<i32>,
    pub size: Vec<f32>,
}

pub fn decode_points(bytes: &[u8]) -> Result<PointColumns, String> {
    if bytes.len() < 8 || &bytes[..4] != POINTS_MAGIC {
        return Err("not a PTS1 block".into());
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if bytes.len() != 8 + n * 18 {
        return Err(format!("expected {} bytes for {n} points, got {}", 8 + n * 18, bytes.len()));
    }
    let mut at = 8;
    let mut take = |w: usize| {
        let s = &bytes[at..at + w * n];
        at += w * n;
        s
    };
    let f32s = |s: &[u8]| s.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    let x = f32s(take(4));
    let y = f32s(take(4));
    let year = take(2).chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
    let cluster = take(4).chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect();
    let size = f32s(take(4));
    Ok(PointColumns { x, y, year, cluster, size })
}

impl Served {
    pub fn new(dataset: Dataset) -> Self {
        let mut tsv = Vec::new();
        write_tsv(&dataset.corpus, &mut tsv).expect("writing to memory");
        let clusters = match &dataset.tree {
            Some(t) => t.to_json(),
            None => json!({ "nodes": [] }).to_string(),
        };
        Served {
            points_tsv: tsv.into(),
            points_bin: encode_points(&dataset).into(),
            clusters: clusters.into(),
            labels: labels_to_json(&dataset.labels).into(),
            edges: edges_to_json(&dataset.edges).into(),
            dataset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedDataset {
    pub path: String,
    pub reason: String,
}

/// Datasets keyed by id; immutable once built.
#[derive(Default)]
pub struct DatasetRegistry {
    datasets: BTreeMap<String, Arc<Served>>,
}

impl DatasetRegistry {
    /// Registers `dir` itself if it holds a manifest, then every immediate
    /// subdirectory that does, in name order. Unloadable datasets and
    /// duplicate ids are skipped and reported.
    pub fn load_dir(dir: &Path) -> std::io::Result<(Self, Vec<SkippedDataset>)> {
        let mut candidates: Vec<PathBuf> = Vec::new();
        if dir.join(MANIFEST_FILE).is_file() {
            candidates.push(dir.to_path_buf());
        }
        let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir() && p.join(MANIFEST_FILE).is_file())
            .collect();
        subdirs.sort();
        candidates.extend(subdirs);

        let mut reg = DatasetRegistry::default();
        let mut skipped = Vec::new();
        for path in candidates {
            let skip = |reason: String| SkippedDataset {
                path: path.display().to_string(),
                reason,
            };
            match Dataset::load(&path) {
                Ok(ds) if reg.datasets.contains_key(ds.id()) => {
                    skipped.push(skip(format!("duplicate dataset id {:?}", ds.id())));
                }
                Ok(ds) => {
                    reg.insert(ds);
                }
                Err(e) => skipped.push(skip(e.to_string())),
            }
        }
        for s in &skipped {
            log::warn!("dataset at {} skipped: {}", s.path, s.reason);
        }
        Ok((reg, skipped))
    }

    /// Adds a dataset, replacing any with the same id.
    pub fn insert(&mut self, dataset: Dataset) {
        self.datasets.insert(dataset.id().to_string(), Arc::new(Served::new(dataset)));
    }

    pub fn get(&self, id: &str) -> Option<&Arc<Served>> {
        self.datasets.get(id)
    }

    pub fn len(&self) -> usize {
        self.datasets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.datasets.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.datasets.keys().map(String::as_str)
    }
}

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<DatasetRegistry>,
    pub model: Arc<dyn ModelClient>,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    fields: Vec<FieldError>,
}

fn error(status: StatusCode, kind: &str, message: impl Into<String>, fields: Vec<FieldError>) -> Response {
    let body = ErrorBody {
        error: kind.into(),
        message: message.into(),
        fields,
    };
    (status, Json(body)).into_response()
}

fn not_found(id: &str) -> Response {
    error(StatusCode::NOT_FOUND, "not_found", format!("unknown dataset {id:?}"), Vec::new())
}

fn json_bytes(b: &Bytes) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], b.clone()).into_response()
}

fn lookup(state: &AppState, id: &str) -> Result<Arc<Served>, Response> {
    state.registry.get(id).cloned().ok_or_else(|| not_found(id))
}

async fn health(State(state): State<AppState>) -> Json<Value> {
    Json(json!({ "status": "ok", "datasets": state.registry.len(), "model_client": state.model.name() }))
}

async fn list_datasets(State(state): State<AppState>) -> Json<Value> {
    let list: Vec<Value> = state
        .registry
        .datasets
        .values()
        .map(|s| {
            let m = &s.dataset.manifest;
            json!({
                "dataset_id": m.dataset_id,
                "n_articles": m.n_articles,
                "n_clusters": s.dataset.tree.as_ref().map_or(0, |t| t.nodes.len()),
                "has_edges": m.artifacts.edges.is_some(),
                "has_embeddings": m.artifacts.embeddings.is_some(),
                "pipeline_config_digest": m.pipeline_config_digest,
                "seed": m.seed,
            })
        })
        .collect();
    Json(json!({ "datasets": list }))
}

#[derive(Debug, Deserialize)]
struct PointsQuery {
    format: Option<String>,
}

async fn points(State(state): State<AppState>, UrlPath(id): UrlPath<String>, Query(q): Query<PointsQuery>) -> Response {
    let s = match lookup(&state, &id) {
        Ok(s) => s,
        Err(r) => return r,
    };
    match q.format.as_deref().unwrap_or("tsv") {
        "tsv" => ([(header::CONTENT_TYPE, "text/tab-separated-values")], s.points_tsv.clone()).into_response(),
        "binary" => ([(header::CONTENT_TYPE, "application/octet-stream")], s.points_bin.clone()).into_response(),
        other => error(
            StatusCode::BAD_REQUEST,
            "bad_request",
            format!("format must be tsv or binary, got {other:?}"),
            Vec::new(),
        ),
    }
}

async fn clusters(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    lookup(&state, &id).map_or_else(|r| r, |s| json_bytes(&s.clusters))
}

async fn labels(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    lookup(&state, &id).map_or_else(|r| r, |s| json_bytes(&s.labels))
}

async fn edges(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    lookup(&state, &id).map_or_else(|r| r, |s| json_bytes(&s.edges))
}

#[derive(Debug, Deserialize)]
struct ArticlesQuery {
    pmids: Option<String>,
    page: Option<usize>,
}

fn article_json(a: &Article, cluster: i64) -> Value {
    json!({
        "pmid": a.pmid,
        "pub_date": a.date.map(|d| d.to_string()),
        "year": a.year(),
        "journal": a.journal,
        "title": a.title,
        "abstract": a.abstract_text,
        "mesh_terms": a.mesh_terms,
        "x": a.x,
        "y": a.y,
        "citation_count": a.citation_count,
        "size": a.size,
        "cluster": cluster,
    })
}

/// Article details for comma-separated `pmids` (or every article), 100 per
/// page; unknown pmids are listed, not dropped.
async fn articles(State(state): State<AppState>, UrlPath(id): UrlPath<String>, Query(q): Query<ArticlesQuery>) -> Response {
    let s = match lookup(&state, &id) {
        Ok(s) => s,
        Err(r) => return r,
    };
    let ds = &s.dataset;
    let mut missing = Vec::new();
    let indices: Vec<usize> = match q.pmids.as_deref().map(str::trim).filter(|p| !p.is_empty()) {
        Some(list) => {
            let mut seen = HashSet::new();
            list.split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty() && seen.insert(*p))
                .filter_map(|p| {
                    let i = ds.corpus.index_of(p);
                    if i.is_none() {
                        missing.push(p.to_string());
                    }
                    i
                })
                .collect()
        }
        None => (0..ds.len()).collect(),
    };
    let page = q.page.unwrap_or(0);
    let pages = indices.len().div_ceil(ARTICLE_PAGE_SIZE).max(1);
    let arts = ds.corpus.articles();
    let items: Vec<Value> = indices
        .iter()
        .skip(page.saturating_mul(ARTICLE_PAGE_SIZE))
        .take(ARTICLE_PAGE_SIZE)
        .map(|&i| article_json(&arts[i], ds.point_cluster[i]))
        .collect();
    Json(json!({
        "articles": items,
        "missing": missing,
        "page": page,
        "pages": pages,
        "page_size": ARTICLE_PAGE_SIZE,
        "total": indices.len(),
    }))
    .into_response()
}

#[derive(Debug, Deserialize)]
pub struct PolygonRequest {
    pub vertices: Vec<[f64; 2]>,
}

async fn select_polygon(State(state): State<AppState>, UrlPath(id): UrlPath<String>, body: Bytes) -> Response {
    let s = match lookup(&state, &id) {
        Ok(s) => s,
        Err(r) => return r,
    };
    let req: PolygonRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => {
            return error(
                StatusCode::BAD_REQUEST,
                "bad_request",
                e.to_string(),
                vec![FieldError {
                    field: "vertices".into(),
                    message: e.to_string(),
                }],
            )
        }
    };
    match s.dataset.spatial.query_polygon(&req.vertices) {
        Ok(hits) => {
            let mut pmids: Vec<&str> = hits.iter().map(|&i| s.dataset.spatial.pmid(i)).collect();
            pmids.sort_unstable();
            Json(json!({ "count": pmids.len(), "pmids": pmids })).into_response()
        }
        Err(e) => error(
            StatusCode::BAD_REQUEST,
            "bad_polygon",
            e.to_string(),
            vec![FieldError {
                field: "vertices".into(),
                message: e.to_string(),
            }],
        ),
    }
}

fn agent_error(e: AgentError) -> Response {
    match e {
        AgentError::Validation(fields) => {
            let msg = AgentError::Validation(fields.clone()).to_string();
            error(StatusCode::UNPROCESSABLE_ENTITY, "validation", msg, fields)
        }
        AgentError::EmptySelection => error(StatusCode::UNPROCESSABLE_ENTITY, "empty_selection", e.to_string(), Vec::new()),
        AgentError::Contract(_) => error(StatusCode::BAD_REQUEST, "bad_request", e.to_string(), Vec::new()),
        AgentError::Mode(_) | AgentError::Unavailable(_) => {
            error(StatusCode::SERVICE_UNAVAILABLE, "unavailable", e.to_string(), Vec::new())
        }
        AgentError::Model(_) => error(StatusCode::BAD_GATEWAY, "model", e.to_string(), Vec::new()),
        AgentError::Internal(_) => error(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string(), Vec::new()),
    }
}

/// Parses a body into `ContextPayload`, naming the offending field on failure.
pub fn parse_payload(body: &[u8]) -> Result<ContextPayload, Vec<FieldError>> {
    let value: Value = serde_json::from_slice(body).map_err(|e| {
        vec![FieldError {
            field: "body".into(),
            message: e.to_string(),
        }]
    })?;
    let Some(obj) = value.as_object() else {
        return Err(vec![FieldError {
            field: "body".into(),
            message: "expected a JSON object".into(),
        }]);
    };
    if !obj.contains_key("dataset_id") {
        return Err(vec![FieldError {
            field: "dataset_id".into(),
            message: "required".into(),
        }]);
    }
    let mut errors = Vec::new();
    for key in ["dataset_id", "selection", "query_text", "retrieval_mode"] {
        if let Some(v) = obj.get(key) {
            let check = match key {
                "selection" => serde_json::from_value::<crate::agents::Selection>(v.clone()).err(),
                "retrieval_mode" => serde_json::from_value::<crate::agents::RetrievalMode>(v.clone()).err(),
                _ => serde_json::from_value::<String>(v.clone()).err(),
            };
            if let Some(e) = check {
                errors.push(FieldError {
                    field: key.into(),
                    message: e.to_string(),
                });
            }
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    serde_json::from_value(value).map_err(|e| {
        vec![FieldError {
            field: "body".into(),
            message: e.to_string(),
        }]
    })
}

async fn agent_query(State(state): State<AppState>, body: Bytes) -> Response {
    let payload = match parse_payload(&body) {
        Ok(p) => p,
        Err(fields) => {
            return error(StatusCode::BAD_REQUEST, "validation", "request body does not match ContextPayload", fields)
        }
    };
    let s = match lookup(&state, &payload.dataset_id) {
        Ok(s) => s,
        Err(r) => return r,
    };
    log::info!(
        "agent query on {}: {:?} ({} pmids, {} clusters)",
        payload.dataset_id,
        payload.query_text,
        payload.selection.pmids.len(),
        payload.selection.cluster_ids.len()
    );
    let model = state.model.clone();
    let result = tokio::task::spawn_blocking(move || {
        let tools = AgentTools {
            model: model.as_ref(),
            open: None,
        };
        handle_query(&s.dataset, payload, &tools)
    })
    .await;
    match result {
        Ok(Ok(resp)) => {
            log::info!(
                "agent response: {} actions, {} provenance entries, trace {:?}",
                resp.actions.len(),
                resp.provenance.len(),
                resp.agent_trace.iter().map(|t| t.tool.as_str()).collect::<Vec<_>>()
            );
            Json(resp).into_response()
        }
        Ok(Err(e)) => {
            log::info!("agent query rejected: {e}");
            agent_error(e)
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string(), Vec::new()),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/datasets", get(list_datasets))
        .route("/api/datasets/{id}/points", get(points))
        .route("/api/datasets/{id}/clusters", get(clusters))
        .route("/api/datasets/{id}/labels", get(labels))
        .route("/api/datasets/{id}/edges", get(edges))
        .route("/api/datasets/{id}/articles", get(articles))
        .route("/api/datasets/{id}/selection/polygon", post(select_polygon))
        .route("/api/agent/query", post(agent_query))
        .with_state(state)
}

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot read data directory {path}: {source}")]
    DataDir { path: String, source: std::io::Error },
    #[error("no loadable dataset under {0}")]
    NoDatasets(String),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

pub struct ServeConfig {
    pub addr: SocketAddr,
    pub data_dir: PathBuf,
}

/// Loads the registry, binds and serves until ctrl-c.
pub async fn serve(config: ServeConfig, model: Arc<dyn ModelClient>) -> Result<(), ServerError> {
    let (registry, _) = DatasetRegistry::load_dir(&config.data_dir).map_err(|source| ServerError::DataDir {
        path: config.data_dir.display().to_string(),
        source,
    })?;
    if registry.is_empty() {
        return Err(ServerError::NoDatasets(config.data_dir.display().to_string()));
    }
    let listener = tokio::net::TcpListener::bind(config.addr)
        .await
        .map_err(|source| ServerError::Bind {
            addr: config.addr,
            source,
        })?;
    log::info!(
        "serving {} datasets ({}) on {} with the {} model client",
        registry.len(),
        registry.ids().collect::<Vec<_>>().join(", "),
        listener.local_addr()?,
        model.name()
    );
    let app = router(AppState {
        registry: Arc::new(registry),
        model,
    });
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            log::info!("shutting down");
        })
        .await?;
    Ok(())
}
