//! HTTP scoring protocol for externally hosted regard models.
//!
//! `POST /score` with `{"texts": [...]}` answers
//! `{"results": [{"label": "negative|neutral|positive", "scores": [p_neg, p_neu, p_pos]}, ...]}`.
//! [`RemoteScorer`] is the client; [`score_router`] serves any local
//! [`RegardScorer`] over the same protocol.

use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::{RegardResult, RegardScorer};
use crate::{Error, PolarityLabel, Result};

/// Score vectors from the wire must sum to one within this tolerance.
pub const WIRE_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResult {
    pub label: String,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub results: Vec<WireResult>,
}

impl From<&RegardResult> for WireResult {
    fn from(r: &RegardResult) -> Self {
        WireResult {
            label: r.label.to_string(),
            scores: r.scores.to_vec(),
        }
    }
}

/// Check a response against its request and convert it.
pub fn validate_response(response: ScoreResponse, expected: usize) -> Result<Vec<RegardResult>> {
    if response.results.len() != expected {
        return Err(Error::Remote(format!(
            "expected {expected} results, got {}",
            response.results.len()
        )));
    }
    response
        .results
        .into_iter()
        .enumerate()
        .map(|(i, wire)| {
            let label: PolarityLabel = wire
                .label
                .parse()
                .map_err(|e| Error::Remote(format!("result {i}: {e}")))?;
            let scores: [f64; 3] = wire.scores.as_slice().try_into().map_err(|_| {
                Error::Remote(format!("result {i}: expected 3 scores, got {}", wire.scores.len()))
            })?;
            let result = RegardResult { label, scores };
            result
                .validate(WIRE_SUM_TOLERANCE)
                .map_err(|e| Error::Remote(format!("result {i}: {e}")))?;
            Ok(result)
        })
        .collect()
}

#[derive(Debug)]
pub struct RemoteScorer {
    url: String,
    agent: ureq::Agent,
    pub max_retries: u32,
    pub initial_backoff: Duration,
    /// Texts per request; `None` sends the whole batch at once.
    pub batch_size: Option<usize>,
    in_flight: Mutex<()>,
}

enum Attempt {
    Retry(String),
    Fail(Error),
}

impl RemoteScorer {
    /// `endpoint` is a base URL; `/score` is appended unless already present.
    pub fn new(endpoint: &str) -> Self {
        let trimmed = endpoint.trim_end_matches('/');
        let url = if trimmed.ends_with("/score") {
            trimmed.to_string()
        } else {
            format!("{trimmed}/score")
        };
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .new_agent();
        RemoteScorer {
            url,
            agent,
            max_retries: 3,
            initial_backoff: Duration::from_millis(100),
            batch_size: None,
            in_flight: Mutex::new(()),
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn attempt(&self, body: &ScoreRequest) -> std::result::Result<ScoreResponse, Attempt> {
        let mut response = match self.agent.post(&self.url).send_json(body) {
            Ok(r) => r,
            Err(e) => return Err(Attempt::Retry(e.to_string())),
        };
        let status = response.status().as_u16();
        if status >= 500 {
            return Err(Attempt::Retry(format!("server returned status {status}")));
        }
        if status != 200 {
            return Err(Attempt::Fail(Error::Remote(format!("server returned status {status}"))));
        }
        response
            .body_mut()
            .read_json::<ScoreResponse>()
            .map_err(|e| Attempt::Fail(Error::Remote(format!("malformed response body: {e}"))))
    }

    fn send(&self, texts: &[&str]) -> Result<Vec<RegardResult>> {
        let body = ScoreRequest {
            texts: texts.iter().map(|t| t.to_string()).collect(),
        };
        let _guard = self.in_flight.lock().unwrap_or_else(|p| p.into_inner());
        let mut backoff = self.initial_backoff;
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Ok(response) => return validate_response(response, texts.len()),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(msg)) if attempt >= self.max_retries => {
                    return Err(Error::Remote(format!(
                        "{} failed after {} attempts: {msg}",
                        self.url,
                        attempt + 1
                    )))
                }
                Err(Attempt::Retry(_)) => {
                    std::thread::sleep(backoff);
                    backoff *= 2;
                    attempt += 1;
                }
            }
        }
    }
}

impl RegardScorer for RemoteScorer {
    fn name(&self) -> &str {
        "remote"
    }

    fn score_batch(&self, texts: &[&str]) -> Result<Vec<RegardResult>> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let chunk = self.batch_size.unwrap_or(texts.len()).max(1);
        let mut out = Vec::with_capacity(texts.len());
        for part in texts.chunks(chunk) {
            out.extend(self.send(part)?);
        }
        Ok(out)
    }
}

pub fn remote_score(endpoint: &str, masked_texts: &[&str]) -> Result<Vec<RegardResult>> {
    RemoteScorer::new(endpoint).score_batch(masked_texts)
}

/// Serve `scorer` at `POST /score`.
pub fn score_router(scorer: Arc<dyn RegardScorer>) -> Router {
    Router::new().route("/score", post(handle_score)).with_state(scorer)
}

async fn handle_score(
    State(scorer): State<Arc<dyn RegardScorer>>,
    Json(request): Json<ScoreRequest>,
) -> std::result::Result<Json<ScoreResponse>, (StatusCode, String)> {
    let texts: Vec<&str> = request.texts.iter().map(String::as_str).collect();
    let results = scorer
        .score_batch(&texts)
        .map_err(|e| (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(ScoreResponse {
        results: results.iter().map(WireResult::from).collect(),
    }))
}
