//! The service against stand-in NER and embedding servers.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use medlens_service::config::{EmbeddingKind, ExtractionProvider};
use medlens_service::{app, AppState, ServiceConfig};
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

const DIM: usize = 4;

/// Tags every occurrence of "jaw" as a body part.
async fn ner(Json(req): Json<Value>) -> Json<Value> {
    let text: Vec<char> = req["text"].as_str().unwrap().to_lowercase().chars().collect();
    let mut spans = Vec::new();
    for i in 0..text.len().saturating_sub(2) {
        if text[i..i + 3] == ['j', 'a', 'w'] {
            spans.push(json!({"start": i, "end": i + 3, "type": "bod"}));
        }
    }
    Json(Value::Array(spans))
}

async fn embed(flag: Arc<AtomicBool>, Json(req): Json<Value>) -> Result<Json<Value>, StatusCode> {
    if flag.load(Ordering::SeqCst) {
        return Err(StatusCode::INTERNAL_SERVER_ERROR);
    }
    let vectors: Vec<Vec<f64>> = req["texts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| {
            let n = t.as_str().unwrap().len() as f64;
            vec![1.0, n, (n % 7.0), 0.5]
        })
        .collect();
    Ok(Json(json!({ "vectors": vectors })))
}

async fn spawn_mock(fail: Arc<AtomicBool>) -> String {
    let router = Router::new()
        .route("/ner", post(ner))
        .route("/embed", post(move |body| embed(fail.clone(), body)));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router).await.unwrap() });
    format!("http://{addr}")
}

async fn post_corpus(app: &Router, body: &str) -> (StatusCode, Value) {
    let req = Request::post("/api/corpora").body(Body::from(body.to_string())).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, serde_json::from_slice(&bytes).unwrap())
}

#[tokio::test(flavor = "multi_thread")]
async fn external_providers_feed_the_pipeline() {
    let fail = Arc::new(AtomicBool::new(false));
    let base = spawn_mock(fail.clone()).await;
    let dir = TempDir::new().unwrap();
    let mut config = ServiceConfig::default();
    config.server.corpus_dir = dir.path().join("corpora");
    config.server.session_dir = dir.path().join("sessions");
    config.extraction.provider = ExtractionProvider::External;
    config.extraction.endpoint = Some(format!("{base}/ner"));
    config.embedding.provider = EmbeddingKind::External;
    config.embedding.endpoint = Some(format!("{base}/embed"));
    config.embedding.dimension = DIM;
    let app = app(Arc::new(AppState::new(config)));

    let body = "{\"id\":\"a\",\"title\":\"A\",\"body\":\"Jaw pain.\\n\\nThe jaw was swollen near the jaw line.\"}\n\
                {\"id\":\"b\",\"title\":\"B\",\"body\":\"No complaints.\"}\n";
    let (status, v) = post_corpus(&app, body).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    assert_eq!(v["entity_sets"], 2);
    assert!(v["extraction_failures"].as_array().unwrap().is_empty());

    let req = Request::get("/api/documents/a").body(Body::empty()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let doc: Value = serde_json::from_slice(&axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap()).unwrap();
    let spans: Vec<&Value> = doc["paragraphs"].as_array().unwrap().iter().flat_map(|p| p["spans"].as_array().unwrap()).collect();
    assert_eq!(spans.len(), 3);
    assert!(spans.iter().all(|s| s["type"] == "bod"));

    fail.store(true, Ordering::SeqCst);
    let (status, v) = post_corpus(&app, "{\"id\":\"c\",\"title\":\"C\",\"body\":\"Jaw.\"}\n").await;
    assert_eq!(status, StatusCode::BAD_GATEWAY, "{v}");
    assert!(v["error"].as_str().unwrap().contains("provider"));
}
