mod common;

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use claimgraph::engine::{Engine, EngineConfig, ProviderKind};
use claimgraph::remote::{conformance, RemoteScorer};
use claimgraph::service::AppState;
use claimgraph_core::scoring::{EmbeddingProvider, ScoringError};
use claimgraph_core::{EvalStatus, GraphStore, NliProvider, ReferenceEmbedder, ReferenceNli};
use common::*;
use serde::Deserialize;
use serde_json::json;

/// Scorer server backed by the reference scorers. Reports its NLI classes
/// in a non-default order and rejects batches above `max_batch`.
#[derive(Default)]
struct Mock {
    down: AtomicBool,
    max_batch: usize,
    rejected: AtomicUsize,
}

#[derive(Deserialize)]
struct Texts {
    texts: Vec<String>,
}

#[derive(Deserialize)]
struct Pairs {
    pairs: Vec<[String; 2]>,
}

async fn info(State(m): State<Arc<Mock>>) -> Response {
    if m.down.load(Ordering::SeqCst) {
        return StatusCode::SERVICE_UNAVAILABLE.into_response();
    }
    Json(json!({"dim": 4096, "model": "reference-mock", "labels": ["entailment", "neutral", "contradiction"]}))
        .into_response()
}

async fn embed(State(m): State<Arc<Mock>>, Json(req): Json<Texts>) -> Response {
    if m.down.load(Ordering::SeqCst) {
        return StatusCode::SERVICE_UNAVAILABLE.into_response();
    }
    if req.texts.len() > m.max_batch {
        m.rejected.fetch_add(1, Ordering::SeqCst);
        return StatusCode::PAYLOAD_TOO_LARGE.into_response();
    }
    let texts: Vec<&str> = req.texts.iter().map(String::as_str).collect();
    let vectors: Vec<Vec<f64>> = ReferenceEmbedder::default()
        .embed(&texts)
        .unwrap()
        .iter()
        .map(|e| e.values().to_vec())
        .collect();
    Json(json!({ "vectors": vectors })).into_response()
}

async fn nli(State(m): State<Arc<Mock>>, Json(req): Json<Pairs>) -> Response {
    if m.down.load(Ordering::SeqCst) {
        return StatusCode::SERVICE_UNAVAILABLE.into_response();
    }
    if req.pairs.len() > m.max_batch {
        m.rejected.fetch_add(1, Ordering::SeqCst);
        return StatusCode::PAYLOAD_TOO_LARGE.into_response();
    }
    let pairs: Vec<(&str, &str)> = req
        .pairs
        .iter()
        .map(|[p, h]| (p.as_str(), h.as_str()))
        .collect();
    let probs: Vec<[f64; 3]> = ReferenceNli
        .classify(&pairs)
        .unwrap()
        .iter()
        .map(|v| [v.entailment, v.neutral, v.contradiction])
        .collect();
    Json(json!({ "probs": probs })).into_response()
}

fn spawn_mock(max_batch: usize) -> (String, Arc<Mock>) {
    let mock = Arc::new(Mock {
        max_batch,
        ..Mock::default()
    });
    let app = Router::new()
        .route("/info", get(info))
        .route("/embed", post(embed))
        .route("/nli", post(nli))
        .with_state(mock.clone());
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    (format!("http://{addr}"), mock)
}

fn remote_config(url: &str, gazetteer: &std::path::Path, strict: bool) -> EngineConfig {
    EngineConfig {
        gazetteer: Some(gazetteer.into()),
        sts: ProviderKind::Remote,
        nli: ProviderKind::Remote,
        scorer_url: Some(url.into()),
        strict_providers: strict,
        ..EngineConfig::default()
    }
}

fn gazetteer_file() -> tempfile::NamedTempFile {
    let f = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(f.path(), CORPUS_GAZETTEER).unwrap();
    f
}

fn corpus_store() -> GraphStore {
    let engine = corpus_engine();
    let mut store = GraphStore::new();
    claimgraph::ingest::ingest_str(&mut store, &corpus_jsonl(), &Default::default()).unwrap();
    claimgraph_core::annotate_store(&mut store, engine.linker(), engine.linker_config()).unwrap();
    store
}

#[test]
fn mock_server_conforms() {
    let (url, _) = spawn_mock(64);
    let checks = conformance(&url);
    assert_eq!(checks.len(), 3);
    assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    let down = conformance("http://127.0.0.1:9");
    assert_eq!(down.len(), 1);
    assert!(!down[0].passed);
}

/// Set `CLAIMGRAPH_SCORER_URL` to run the conformance checks against a
/// live scorer server.
#[test]
fn external_server_conforms_when_configured() {
    let Ok(url) = std::env::var("CLAIMGRAPH_SCORER_URL") else {
        return;
    };
    let checks = conformance(&url);
    assert!(checks.iter().all(|c| c.passed), "{checks:?}");
}

#[test]
fn client_matches_reference_scorers() {
    let (url, _) = spawn_mock(64);
    let remote = RemoteScorer::connect(&url).unwrap();
    assert_eq!(remote.info().model, "reference-mock");
    let texts = ["Η Δανία και η Αυστρία", "Norway exports salmon to Sweden."];
    let got = remote.embed(&texts).unwrap();
    let want = ReferenceEmbedder::default().embed(&texts).unwrap();
    assert_eq!(got, want);

    let pairs = [
        ("Norway exports salmon to Sweden.", "Norway exports salmon"),
        (
            "Norway exports salmon to Sweden.",
            "Norway never exports salmon",
        ),
        ("Norway exports salmon to Sweden.", "Finland exports salmon"),
    ];
    let got = remote.classify(&pairs).unwrap();
    let want = ReferenceNli.classify(&pairs).unwrap();
    for (g, w) in got.iter().zip(&want) {
        assert_eq!(g.argmax(), w.argmax());
        for (a, b) in g.as_array().iter().zip(w.as_array()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn oversized_batches_are_split() {
    let (url, mock) = spawn_mock(2);
    let remote = RemoteScorer::connect(&url).unwrap();
    let texts: Vec<String> = (0..7).map(|i| format!("text number {i}")).collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let got = remote.embed(&refs).unwrap();
    assert_eq!(got, ReferenceEmbedder::default().embed(&refs).unwrap());
    let pairs: Vec<(&str, &str)> = refs.iter().map(|t| (*t, *t)).collect();
    assert_eq!(remote.classify(&pairs).unwrap().len(), 7);
    assert!(mock.rejected.load(Ordering::SeqCst) > 0);
}

#[test]
fn remote_engine_agrees_with_reference_engine() {
    let (url, _) = spawn_mock(64);
    let gaz = gazetteer_file();
    let remote = Engine::build(&remote_config(&url, gaz.path(), true)).unwrap();
    let local = corpus_engine();
    let store = corpus_store();
    for claim in [
        "Greece signed the energy agreement with Italy",
        "Spain never joined the fishing treaty with Portugal",
    ] {
        let r = remote.evaluate(claim, &store).unwrap();
        let l = local.evaluate(claim, &store).unwrap();
        assert!(!r.degraded);
        assert_eq!(r.evaluation.best, l.evaluation.best);
        assert_eq!(
            r.evaluation.verdict.unwrap().argmax(),
            l.evaluation.verdict.unwrap().argmax()
        );
    }
}

#[test]
fn outage_degrades_or_fails_by_policy() {
    let (url, mock) = spawn_mock(64);
    let gaz = gazetteer_file();
    let lenient = Engine::build(&remote_config(&url, gaz.path(), false)).unwrap();
    let strict = Engine::build(&remote_config(&url, gaz.path(), true)).unwrap();
    let store = corpus_store();
    let claim = "Greece signed the energy agreement with Italy";
    mock.down.store(true, Ordering::SeqCst);

    let out = lenient.evaluate(claim, &store).unwrap();
    assert!(out.degraded);
    assert_eq!(out.evaluation.status, EvalStatus::Ok);
    assert_eq!(
        out.evaluation,
        corpus_engine().evaluate(claim, &store).unwrap().evaluation
    );

    let out = strict.evaluate(claim, &store).unwrap();
    assert_eq!(out.evaluation.status, EvalStatus::ProviderUnavailable);
    assert!(matches!(
        strict.health(),
        Err(ScoringError::ProviderUnavailable(_))
    ));

    let state = Arc::new(AppState::new(strict, None));
    state.install(store);
    let base = spawn_service(state);
    let body = json!({ "claim": claim }).to_string();
    let (status, resp) = call("POST", &format!("{base}/claims"), Some(&body));
    assert_eq!(status, 503);
    assert_eq!(resp["status"], "provider_unavailable");
    assert_eq!(call("GET", &format!("{base}/healthz"), None).0, 503);

    mock.down.store(false, Ordering::SeqCst);
    assert_eq!(call("POST", &format!("{base}/claims"), Some(&body)).0, 200);
    assert_eq!(call("GET", &format!("{base}/healthz"), None).0, 200);
}
