//! HTTP API over the current snapshot.

use std::net::SocketAddr;
use std::sync::Arc;

use arc_swap::ArcSwap;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    aggregate_flows, graph_slice, FlowFilter, GroupBy, ServiceError, SliceFilter, Snapshot, SnapshotSource,
};
use crate::notation::{EntityType, Relationship};

pub const DEFAULT_PAGE: usize = 100;
pub const MAX_PAGE: usize = 1000;
pub const ADMIN_HEADER: &str = "x-admin-token";

pub struct AppState {
    snapshot: ArcSwap<Snapshot>,
    source: Option<SnapshotSource>,
    admin_token: Option<String>,
}

impl AppState {
    pub fn new(snapshot: Snapshot, source: Option<SnapshotSource>, admin_token: Option<String>) -> Self {
        Self {
            snapshot: ArcSwap::from_pointee(snapshot),
            source,
            admin_token: admin_token.filter(|t| !t.is_empty()),
        }
    }

    pub fn current(&self) -> Arc<Snapshot> {
        self.snapshot.load_full()
    }

    /// Replaces the snapshot atomically; in-flight requests keep the old one.
    pub fn swap(&self, snapshot: Snapshot) {
        self.snapshot.store(Arc::new(snapshot));
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(skip)]
    status: u16,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            message: message.into(),
            status: status.as_u16(),
        }
    }

    fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        match &e {
            ServiceError::InvalidRequest(_) => ApiError::invalid(e.to_string()),
            ServiceError::NotFound(_) => ApiError::not_found(e.to_string()),
            ServiceError::UnknownCluster(_) => ApiError::new(StatusCode::BAD_REQUEST, "unknown_cluster", e.to_string()),
            ServiceError::Load(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "reload_failed", e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(json!({"code": self.code, "message": self.message}))).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

#[derive(Debug, Default, Deserialize)]
pub struct PageParams {
    pub cursor: Option<String>,
    pub limit: Option<usize>,
}

/// Cursors name an offset within one snapshot version, so a page request
/// after a reload fails instead of silently skipping items.
fn encode_cursor(version: &str, offset: usize) -> String {
    format!("{version}.{offset}")
}

fn decode_cursor(version: &str, cursor: &str) -> Result<usize, ApiError> {
    let (v, offset) = cursor
        .split_once('.')
        .ok_or_else(|| ApiError::invalid("malformed cursor"))?;
    if v != version {
        return Err(ApiError::new(StatusCode::CONFLICT, "stale_cursor", "the graph was reloaded; restart paging"));
    }
    offset.parse().map_err(|_| ApiError::invalid("malformed cursor"))
}

fn paginate<T: Serialize>(snapshot: &Snapshot, items: Vec<T>, page: &PageParams) -> ApiResult {
    let limit = page.limit.unwrap_or(DEFAULT_PAGE);
    if limit == 0 || limit > MAX_PAGE {
        return Err(ApiError::invalid(format!("limit must lie in 1..={MAX_PAGE}")));
    }
    let start = match &page.cursor {
        Some(c) => decode_cursor(&snapshot.version, c)?,
        None => 0,
    };
    let total = items.len();
    let end = (start + limit).min(total);
    let next = (end < total).then(|| encode_cursor(&snapshot.version, end));
    let slice: Vec<T> = items.into_iter().skip(start).take(limit).collect();
    Ok(Json(json!({"items": slice, "next_cursor": next, "total": total})))
}

fn parse_type(s: Option<&str>) -> Result<Option<EntityType>, ApiError> {
    s.filter(|s| !s.is_empty())
        .map(|s| s.parse::<EntityType>().map_err(|e| ApiError::invalid(e.to_string())))
        .transpose()
}

#[derive(Debug, Default, Deserialize)]
struct GraphParams {
    cluster: Option<String>,
    #[serde(rename = "type")]
    entity_type: Option<String>,
    q: Option<String>,
}

async fn get_graph(State(state): State<Arc<AppState>>, Query(p): Query<GraphParams>) -> ApiResult {
    let snap = state.current();
    let filter = SliceFilter {
        cluster: p.cluster.filter(|c| !c.is_empty()),
        entity_type: parse_type(p.entity_type.as_deref())?,
        query: p.q.filter(|q| !q.trim().is_empty()),
    };
    let slice = graph_slice(&snap, &filter)?;
    Ok(Json(json!({
        "meta": snap.graph.meta,
        "nodes": slice.nodes,
        "edges": slice.edges,
        "clusters": snap.graph.clusters,
        "filter": slice.filter,
    })))
}

async fn get_node(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let snap = state.current();
    let node = snap.node(&id).ok_or_else(|| ApiError::not_found(format!("no node `{id}`")))?;
    let out_degree = snap.graph.edges.iter().filter(|e| e.source == id).count();
    let in_degree = snap.graph.edges.iter().filter(|e| e.target == id).count();
    let metrics = snap
        .analysis
        .as_ref()
        .and_then(|a| a.nodes.iter().find(|m| m.id == id));
    Ok(Json(json!({
        "node": node,
        "out_degree": out_degree,
        "in_degree": in_degree,
        "metrics": metrics,
    })))
}

#[derive(Debug, Serialize)]
struct Neighbor<'a> {
    id: &'a str,
    direction: &'static str,
    edge_id: &'a str,
    relationship: Relationship,
    weight: usize,
}

async fn get_neighbors(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(page): Query<PageParams>,
) -> ApiResult {
    let snap = state.current();
    if snap.node(&id).is_none() {
        return Err(ApiError::not_found(format!("no node `{id}`")));
    }
    let mut items = Vec::new();
    for e in &snap.graph.edges {
        if e.source == id {
            items.push(Neighbor {
                id: &e.target,
                direction: "out",
                edge_id: &e.id,
                relationship: e.relationship,
                weight: e.weight,
            });
        }
        if e.target == id && !e.is_self_loop {
            items.push(Neighbor {
                id: &e.source,
                direction: "in",
                edge_id: &e.id,
                relationship: e.relationship,
                weight: e.weight,
            });
        }
    }
    paginate(&snap, items, &page)
}

#[derive(Debug, Default, Deserialize)]
struct EdgeParams {
    cause: Option<String>,
    effect: Option<String>,
    cursor: Option<String>,
    limit: Option<usize>,
}

async fn get_edges(State(state): State<Arc<AppState>>, Query(p): Query<EdgeParams>) -> ApiResult {
    let snap = state.current();
    let items: Vec<_> = snap
        .graph
        .edges
        .iter()
        .filter(|e| p.cause.as_ref().is_none_or(|c| &e.source == c))
        .filter(|e| p.effect.as_ref().is_none_or(|c| &e.target == c))
        .collect();
    paginate(&snap, items, &PageParams { cursor: p.cursor, limit: p.limit })
}

#[derive(Debug, Default, Deserialize)]
struct FlowParams {
    group_by: Option<String>,
    cause_type: Option<String>,
    effect_type: Option<String>,
    relationship: Option<String>,
    cluster: Option<String>,
    cursor: Option<String>,
    limit: Option<usize>,
}

async fn get_flows(State(state): State<Arc<AppState>>, Query(p): Query<FlowParams>) -> ApiResult {
    let snap = state.current();
    let group_by = match p.group_by.as_deref() {
        None | Some("") => GroupBy::default(),
        Some(g) => g.parse()?,
    };
    let filter = FlowFilter {
        cause_type: parse_type(p.cause_type.as_deref())?,
        effect_type: parse_type(p.effect_type.as_deref())?,
        relationship: p
            .relationship
            .as_deref()
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<Relationship>().map_err(|e| ApiError::invalid(format!("unknown relationship `{e}`"))))
            .transpose()?,
        cluster: p.cluster.filter(|c| !c.is_empty()),
    };
    let rows = aggregate_flows(&snap.graph, group_by, &filter)?;
    paginate(&snap, rows, &PageParams { cursor: p.cursor, limit: p.limit })
}

async fn get_paper(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let snap = state.current();
    let paper = snap.paper(&id).ok_or_else(|| ApiError::not_found(format!("no paper `{id}`")))?;
    let findings: Vec<Value> = snap
        .graph
        .edges
        .iter()
        .flat_map(|e| {
            e.findings.iter().filter(|f| f.paper_id == id).map(move |f| {
                json!({"edge_id": e.id, "finding_id": f.finding_id, "text": f.text, "net_outcome": f.net_outcome})
            })
        })
        .collect();
    Ok(Json(json!({"paper": paper, "findings": findings})))
}

#[derive(Debug, Default, Deserialize)]
struct SearchParams {
    q: Option<String>,
    cursor: Option<String>,
    limit: Option<usize>,
}

async fn get_search(State(state): State<Arc<AppState>>, Query(p): Query<SearchParams>) -> ApiResult {
    let snap = state.current();
    let hits = snap.index.search(p.q.as_deref().unwrap_or(""))?;
    paginate(&snap, hits, &PageParams { cursor: p.cursor, limit: p.limit })
}

async fn get_clusters(State(state): State<Arc<AppState>>, Query(page): Query<PageParams>) -> ApiResult {
    let snap = state.current();
    let items: Vec<Value> = snap
        .graph
        .clusters
        .iter()
        .map(|c| {
            let nodes = snap
                .graph
                .nodes
                .iter()
                .filter(|n| n.thematic_cluster.as_ref() == Some(&c.id))
                .count();
            json!({
                "id": c.id,
                "entity_type": c.entity_type,
                "name": c.name,
                "description": c.description,
                "members": c.members,
                "representatives": c.representatives,
                "node_count": nodes,
            })
        })
        .collect();
    paginate(&snap, items, &page)
}

async fn get_analysis(State(state): State<Arc<AppState>>) -> ApiResult {
    let snap = state.current();
    let a = snap
        .analysis
        .as_ref()
        .ok_or_else(|| ApiError::not_found("no analysis loaded"))?;
    Ok(Json(serde_json::to_value(a).map_err(|e| ApiError::invalid(e.to_string()))?))
}

async fn get_stats(State(state): State<Arc<AppState>>) -> ApiResult {
    let snap = state.current();
    let g = &snap.graph;
    let mut by_type = serde_json::Map::new();
    for t in EntityType::ALL {
        by_type.insert(t.to_string(), json!(g.nodes.iter().filter(|n| n.entity_type == t).count()));
    }
    Ok(Json(json!({
        "version": snap.version,
        "nodes": g.nodes.len(),
        "edges": g.edges.len(),
        "findings": g.total_weight(),
        "papers": g.papers.len(),
        "clusters": g.clusters.len(),
        "nodes_by_type": by_type,
        "communities": snap.analysis.as_ref().map(|a| a.summary.num_communities),
        "modularity": snap.analysis.as_ref().map(|a| a.summary.modularity),
    })))
}

async fn post_reload(State(state): State<Arc<AppState>>, headers: HeaderMap) -> ApiResult {
    let Some(expected) = &state.admin_token else {
        return Err(ApiError::new(StatusCode::FORBIDDEN, "reload_disabled", "no admin token configured"));
    };
    let given = headers
        .get(ADMIN_HEADER)
        .and_then(|v| v.to_str().ok())
        .or_else(|| {
            headers
                .get("authorization")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.strip_prefix("Bearer "))
        });
    if given != Some(expected.as_str()) {
        return Err(ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong admin token"));
    }
    let source = state
        .source
        .as_ref()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "reload_disabled", "snapshot has no backing files"))?;
    // Loading runs off the async workers; readers keep the old snapshot.
    let source = source.clone();
    let snap = tokio::task::spawn_blocking(move || source.load())
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "reload_failed", e.to_string()))??;
    let version = snap.version.clone();
    state.swap(snap);
    Ok(Json(json!({"version": version})))
}

async fn fallback() -> ApiError {
    ApiError::not_found("no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/graph", get(get_graph))
        .route("/api/nodes/{id}", get(get_node))
        .route("/api/nodes/{id}/neighbors", get(get_neighbors))
        .route("/api/edges", get(get_edges))
        .route("/api/flows", get(get_flows))
        .route("/api/papers/{*id}", get(get_paper))
        .route("/api/search", get(get_search))
        .route("/api/clusters", get(get_clusters))
        .route("/api/analysis", get(get_analysis))
        .route("/api/stats", get(get_stats))
        .route("/api/reload", post(post_reload))
        .fallback(fallback)
        .with_state(state)
}

/// Serves until Ctrl-C.
pub fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        log::info!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })
}
