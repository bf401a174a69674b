mod support;

use std::path::Path;
use std::sync::{Arc, OnceLock};

use atlas::pipeline::{Pipeline, ANALYSIS, GRAPH};
use atlas::service::api::{router, AppState, ADMIN_HEADER};
use atlas::service::SnapshotSource;
use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

const TOKEN: &str = "s3cret";

struct Fixture {
    dir: tempfile::TempDir,
    state: Arc<AppState>,
}

/// One read-only run shared by every test that does not reload.
fn shared() -> &'static Fixture {
    static SHARED: OnceLock<Fixture> = OnceLock::new();
    SHARED.get_or_init(fixture)
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    support::run_fixture(dir.path());
    let source = SnapshotSource {
        graph: dir.path().join(GRAPH),
        analysis: Some(dir.path().join(ANALYSIS)),
    };
    let snapshot = source.load().unwrap();
    let state = Arc::new(AppState::new(snapshot, Some(source), Some(TOKEN.into())));
    Fixture { dir, state }
}

async fn call(state: &Arc<AppState>, req: Request<Body>) -> (StatusCode, Value) {
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn get(state: &Arc<AppState>, uri: &str) -> (StatusCode, Value) {
    call(state, Request::get(uri).body(Body::empty()).unwrap()).await
}

fn enc(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'_' | b'.' | b'-' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect()
}

#[tokio::test]
async fn graph_and_stats() {
    let f = shared();
    let (s, g) = get(&f.state, "/api/graph").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(g["nodes"].as_array().unwrap().len(), 66);
    assert_eq!(g["edges"].as_array().unwrap().len(), 47);
    let (s, stats) = get(&f.state, "/api/stats").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(stats["findings"], 48);
    assert_eq!(stats["papers"], 23);
    assert!(stats["modularity"].as_f64().unwrap() > 0.0);
    let (_, typed) = get(&f.state, "/api/graph?type=ai").await;
    assert!(typed["nodes"].as_array().unwrap().iter().all(|n| n["entity_type"] == "ai"));
    let (s, _) = get(&f.state, "/api/graph?type=robot").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn node_ids_with_reserved_characters() {
    let f = shared();
    for id in ["human>#trust", "human:patient(dementia)>agitation", "ai:llm"] {
        let (s, body) = get(&f.state, &format!("/api/nodes/{}", enc(id))).await;
        assert_eq!(s, StatusCode::OK, "{id}");
        assert_eq!(body["node"]["id"], id);
        assert!(body["metrics"].is_object(), "{id}");
        let (s, nb) = get(&f.state, &format!("/api/nodes/{}/neighbors", enc(id))).await;
        assert_eq!(s, StatusCode::OK);
        assert!(nb["total"].as_u64().unwrap() > 0, "{id}");
    }
    let (s, body) = get(&f.state, "/api/nodes/ai%3Anope").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "not_found");
}

#[tokio::test]
async fn papers_are_addressed_by_doi() {
    let f = shared();
    let (s, body) = get(&f.state, "/api/papers/10.5555/fx.2024.008").await;
    assert_eq!(s, StatusCode::OK);
    assert!(body["paper"]["title"].as_str().unwrap().contains("Music Therapy"));
    assert!(!body["findings"].as_array().unwrap().is_empty());
    let (s, _) = get(&f.state, "/api/papers/10.5555/none").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn search_finds_music_therapy() {
    let f = shared();
    let (s, body) = get(&f.state, "/api/search?q=music").await;
    assert_eq!(s, StatusCode::OK);
    let ids: Vec<&str> = body["items"].as_array().unwrap().iter().map(|h| h["id"].as_str().unwrap()).collect();
    assert!(ids.contains(&"10.5555/fx.2024.008"), "{ids:?}");
    assert!(ids.contains(&"ai:music_generator"), "{ids:?}");
    let (s, _) = get(&f.state, "/api/search?q=%20").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn edges_flows_clusters_analysis() {
    let f = shared();
    let (s, e) = get(&f.state, "/api/edges?cause=ai%3Allm").await;
    assert_eq!(s, StatusCode::OK);
    assert!(e["items"].as_array().unwrap().iter().all(|x| x["source"] == "ai:llm"));
    for group_by in ["node", "thematic_cluster"] {
        let (s, flows) = get(&f.state, &format!("/api/flows?group_by={group_by}&limit=1000")).await;
        assert_eq!(s, StatusCode::OK);
        let total: u64 = flows["items"].as_array().unwrap().iter().map(|r| r["count"].as_u64().unwrap()).sum();
        assert_eq!(total, 48, "{group_by}");
    }
    let (s, _) = get(&f.state, "/api/flows?group_by=planet").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = get(&f.state, "/api/flows?relationship=MAYBE").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, c) = get(&f.state, "/api/clusters?limit=1000").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(c["total"], 30);
    let (s, a) = get(&f.state, "/api/analysis").await;
    assert_eq!(s, StatusCode::OK);
    assert!(a["summary"]["num_communities"].as_u64().unwrap() > 0);
    let (s, _) = get(&f.state, "/api/nowhere").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn pagination_walks_every_edge_once() {
    let f = shared();
    let mut seen = Vec::new();
    let mut uri = "/api/edges?limit=10".to_string();
    loop {
        let (s, page) = get(&f.state, &uri).await;
        assert_eq!(s, StatusCode::OK);
        seen.extend(page["items"].as_array().unwrap().iter().map(|e| e["id"].as_str().unwrap().to_string()));
        match page["next_cursor"].as_str() {
            Some(c) => uri = format!("/api/edges?limit=10&cursor={}", enc(c)),
            None => break,
        }
    }
    let mut unique = seen.clone();
    unique.dedup();
    assert_eq!(seen.len(), 47);
    assert_eq!(unique.len(), 47);
    for bad in ["/api/edges?limit=0", "/api/edges?limit=5000", "/api/edges?cursor=garbage"] {
        assert_eq!(get(&f.state, bad).await.0, StatusCode::BAD_REQUEST, "{bad}");
    }
}

fn rebuild_with_threshold(dir: &Path, threshold: usize) {
    let mut config = support::fixture_config(dir);
    config.graph.threshold = threshold;
    let p = Pipeline::from_config(config).unwrap();
    p.build_graph().unwrap();
    p.analyze().unwrap();
}

#[tokio::test]
async fn reload_requires_token_and_invalidates_cursors() {
    let f = fixture();
    let (_, page) = get(&f.state, "/api/edges?limit=5").await;
    let cursor = page["next_cursor"].as_str().unwrap().to_string();
    let before = f.state.current().version.clone();

    let post = |token: Option<&str>| {
        let mut b = Request::post("/api/reload");
        if let Some(t) = token {
            b = b.header(ADMIN_HEADER, t);
        }
        b.body(Body::empty()).unwrap()
    };
    assert_eq!(call(&f.state, post(None)).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(call(&f.state, post(Some("wrong"))).await.0, StatusCode::UNAUTHORIZED);

    rebuild_with_threshold(f.dir.path(), 100);
    let (s, body) = call(&f.state, post(Some(TOKEN))).await;
    assert_eq!(s, StatusCode::OK);
    assert_ne!(body["version"].as_str().unwrap(), before);
    assert!(f.state.current().node("human>#trust").is_none());

    let (s, body) = get(&f.state, &format!("/api/edges?limit=5&cursor={}", enc(&cursor))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(body["code"], "stale_cursor");
}

#[tokio::test]
async fn reload_disabled_without_token() {
    let f = shared();
    let state = Arc::new(AppState::new(f.state.current().as_ref().clone(), None, None));
    let req = Request::post("/api/reload").header(ADMIN_HEADER, TOKEN).body(Body::empty()).unwrap();
    assert_eq!(call(&state, req).await.0, StatusCode::FORBIDDEN);
}
