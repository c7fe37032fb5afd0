use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use regard_audit::regard::remote::{score_router, RemoteScorer, ScoreRequest, ScoreResponse, WireResult};
use regard_audit::regard::{RegardScorer, SentimentBaseline};
use regard_audit::sentiment::SentimentAnalyzer;
use regard_audit::service::http::{spawn_router, BackgroundServer};

struct Mock {
    calls: AtomicUsize,
    sizes: Mutex<Vec<usize>>,
    status: Option<StatusCode>,
}

async fn handler(State(m): State<Arc<Mock>>, Json(req): Json<ScoreRequest>) -> Result<Json<ScoreResponse>, StatusCode> {
    m.calls.fetch_add(1, Ordering::SeqCst);
    m.sizes.lock().unwrap().push(req.texts.len());
    if let Some(s) = m.status {
        return Err(s);
    }
    let results = req
        .texts
        .iter()
        .map(|_| WireResult { label: "neutral".into(), scores: vec![0.25, 0.5, 0.25] })
        .collect();
    Ok(Json(ScoreResponse { results }))
}

fn mock(status: Option<StatusCode>) -> (BackgroundServer, Arc<Mock>) {
    let m = Arc::new(Mock { calls: AtomicUsize::new(0), sizes: Mutex::new(Vec::new()), status });
    let app = Router::new().route("/score", post(handler)).with_state(m.clone());
    (spawn_router(app, "127.0.0.1:0".parse().unwrap()).unwrap(), m)
}

fn texts(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("XYZ did thing {i}")).collect()
}

#[test]
fn batches_are_chunked() {
    let (server, m) = mock(None);
    let mut scorer = RemoteScorer::new(&server.url());
    scorer.batch_size = Some(40);
    let t = texts(100);
    let refs: Vec<&str> = t.iter().map(String::as_str).collect();
    assert_eq!(scorer.score_batch(&refs).unwrap().len(), 100);
    assert_eq!(*m.sizes.lock().unwrap(), [40, 40, 20]);
}

#[test]
fn client_errors_are_not_retried() {
    let (server, m) = mock(Some(StatusCode::UNPROCESSABLE_ENTITY));
    let err = RemoteScorer::new(&server.url()).score_batch(&["XYZ"]).unwrap_err();
    assert!(err.to_string().contains("422"), "{err}");
    assert_eq!(m.calls.load(Ordering::SeqCst), 1);
}

#[test]
fn retries_give_up() {
    let (server, m) = mock(Some(StatusCode::BAD_GATEWAY));
    let mut scorer = RemoteScorer::new(&server.url());
    scorer.max_retries = 2;
    scorer.initial_backoff = Duration::from_millis(1);
    let err = scorer.score_batch(&["XYZ"]).unwrap_err();
    assert!(err.to_string().contains("after 3 attempts"), "{err}");
    assert_eq!(m.calls.load(Ordering::SeqCst), 3);
}

#[test]
fn unreachable_endpoint_fails() {
    let addr = {
        let (server, _) = mock(None);
        server.addr
    };
    let mut scorer = RemoteScorer::new(&format!("http://{addr}"));
    scorer.max_retries = 0;
    assert!(scorer.score_batch(&["XYZ"]).is_err());
}

#[test]
fn served_scorer_matches_local() {
    let local = Arc::new(SentimentBaseline::new(SentimentAnalyzer::bundled()));
    let server = spawn_router(score_router(local.clone()), "127.0.0.1:0".parse().unwrap()).unwrap();
    let t = ["XYZ was a wonderful friend.", "XYZ was a terrible thief.", "XYZ had a hat."];
    let remote = RemoteScorer::new(&format!("{}/score/", server.url()));
    assert_eq!(remote.score_batch(&t).unwrap(), local.score_batch(&t).unwrap());
    assert!(remote.score_batch(&[]).unwrap().is_empty());
}
