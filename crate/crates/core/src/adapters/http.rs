use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::search::{CandidateGenerator, Layer, PreferenceJudge, ProcessScorer, ScorerSuite, SuiteError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpConfig {
    pub timeout_ms: u64,
    /// Extra attempts after the first one.
    pub retries: usize,
    pub backoff_base_ms: u64,
    pub max_in_flight: usize,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            timeout_ms: 30_000,
            retries: 3,
            backoff_base_ms: 500,
            max_in_flight: 4,
        }
    }
}

struct Gate {
    busy: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

impl Gate {
    fn enter(&self) -> GateGuard<'_> {
        let mut busy = self.busy.lock().expect("gate poisoned");
        while *busy >= self.limit {
            busy = self.freed.wait(busy).expect("gate poisoned");
        }
        *busy += 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.busy.lock().expect("gate poisoned") -= 1;
        self.0.freed.notify_one();
    }
}

/// JSON-over-HTTP client for a remote generator, scorer and judge.
pub struct HttpClient {
    base: String,
    agent: ureq::Agent,
    cfg: HttpConfig,
    gate: Gate,
    retries_used: AtomicUsize,
    peak_in_flight: AtomicUsize,
}

#[derive(Deserialize)]
struct Fragments {
    fragments: Vec<String>,
}

#[derive(Deserialize)]
struct Logit {
    logit: f64,
}

impl HttpClient {
    pub fn new(endpoint: &str, cfg: HttpConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(cfg.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base: endpoint.trim_end_matches('/').to_string(),
            agent,
            gate: Gate {
                busy: Mutex::new(0),
                freed: Condvar::new(),
                limit: cfg.max_in_flight.max(1),
            },
            cfg,
            retries_used: AtomicUsize::new(0),
            peak_in_flight: AtomicUsize::new(0),
        }
    }

    /// Retries performed so far across all calls.
    pub fn retries_used(&self) -> usize {
        self.retries_used.load(Ordering::SeqCst)
    }

    /// Highest number of concurrent requests observed.
    pub fn peak_in_flight(&self) -> usize {
        self.peak_in_flight.load(Ordering::SeqCst)
    }

    fn post<T: DeserializeOwned>(&self, route: &str, body: serde_json::Value) -> Result<T, SuiteError> {
        let _slot = self.gate.enter();
        let busy = *self.gate.busy.lock().expect("gate poisoned");
        self.peak_in_flight.fetch_max(busy, Ordering::SeqCst);

        let url = format!("{}{route}", self.base);
        let mut attempt = 0;
        loop {
            attempt += 1;
            let retryable = match self.agent.post(&url).send_json(&body) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if (200..300).contains(&status) {
                        return resp
                            .body_mut()
                            .read_json::<T>()
                            .map_err(|e| SuiteError::MalformedResponse(format!("{route}: {e}")));
                    }
                    let text = resp.body_mut().read_to_string().unwrap_or_default();
                    let err = SuiteError::Status { status, body: text };
                    if status < 500 {
                        return Err(err);
                    }
                    err
                }
                Err(e) => SuiteError::Transport {
                    attempts: attempt,
                    message: e.to_string(),
                },
            };
            if attempt > self.cfg.retries {
                return Err(retryable);
            }
            self.retries_used.fetch_add(1, Ordering::SeqCst);
            let wait = self.cfg.backoff_base_ms.saturating_mul(1 << (attempt - 1).min(16));
            thread::sleep(Duration::from_millis(wait));
        }
    }
}

impl CandidateGenerator for HttpClient {
    fn expand(&self, question: &str, prefix: &[String], layer: Layer, n: usize) -> Result<Vec<String>, SuiteError> {
        let body = json!({ "question": question, "path_prefix": prefix, "layer": layer, "n": n });
        let out: Fragments = self.post("/generate", body)?;
        if out.fragments.len() != n {
            return Err(SuiteError::MalformedResponse(format!(
                "/generate returned {} fragments, {n} requested",
                out.fragments.len()
            )));
        }
        Ok(out.fragments)
    }
}

impl ProcessScorer for HttpClient {
    fn score_logit(&self, question: &str, prefix: &[String]) -> Result<f64, SuiteError> {
        let out: Logit = self.post("/score", json!({ "question": question, "path_prefix": prefix }))?;
        Ok(out.logit)
    }
}

impl PreferenceJudge for HttpClient {
    fn prefer_logit(&self, question: &str, a: &[String], b: &[String]) -> Result<f64, SuiteError> {
        let out: Logit = self.post("/prefer", json!({ "question": question, "a": a, "b": b }))?;
        Ok(out.logit)
    }
}

/// Builds a suite whose three roles share one client. The client is also
/// returned for retry and concurrency diagnostics.
pub fn http_suite(endpoint: &str, cfg: HttpConfig) -> (ScorerSuite, Arc<HttpClient>) {
    let client = Arc::new(HttpClient::new(endpoint, cfg));
    let suite = ScorerSuite {
        generator: client.clone(),
        process_scorer: client.clone(),
        preference_judge: client.clone(),
    };
    (suite, client)
}
