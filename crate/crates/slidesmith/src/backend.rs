//! Pluggable model and search backends.
//!
//! Every generation stage talks to a [`ModelBackend`]; the pipeline never
//! cares whether the other end is a live chat-completions endpoint
//! ([`HttpBackend`]), a test script ([`ScriptedBackend`]), or the built-in
//! deterministic synthesizer (`canned::CannedBackend`). Requests carry a
//! stage `tag` so scripts can target individual calls, plus a structured
//! `context` that offline backends use instead of parsing prompt prose.

use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;

/// One model call. `prompt` is the full rendered text sent to live
/// backends; `context` mirrors the slot values in structured form for
/// deterministic offline backends; `image_refs` are attached for
/// vision-rubric calls.
#[derive(Debug, Clone)]
pub struct ChatRequest {
    pub tag: String,
    pub prompt: String,
    pub context: serde_json::Value,
    pub image_refs: Vec<String>,
}

impl ChatRequest {
    pub fn new(tag: impl Into<String>, prompt: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            prompt: prompt.into(),
            context: serde_json::Value::Null,
            image_refs: Vec::new(),
        }
    }

    pub fn with_context(mut self, context: serde_json::Value) -> Self {
        self.context = context;
        self
    }

    pub fn with_images(mut self, refs: Vec<String>) -> Self {
        self.image_refs = refs;
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("backend returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("scripted backend has no response for tag {tag:?}: {reason}")]
    Script { tag: String, reason: String },
    #[error("malformed backend response: {0}")]
    BadResponse(String),
}

pub trait ModelBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError>;
    /// Model name recorded in logs and reward records.
    fn identity(&self) -> &str;
}

/// Transport retry policy: transient failures are retried with exponential
/// backoff; scripted-fixture errors are never retried (a script miss is a
/// test bug, not weather).
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, base_delay_ms: 250 }
    }
}

pub fn complete_with_retry(
    backend: &dyn ModelBackend,
    request: &ChatRequest,
    policy: RetryPolicy,
) -> Result<String, BackendError> {
    let mut last = None;
    for attempt in 0..policy.max_attempts.max(1) {
        match backend.complete(request) {
            Ok(text) => return Ok(text),
            Err(err @ BackendError::Script { .. }) => return Err(err),
            Err(err) => {
                if attempt + 1 < policy.max_attempts.max(1) && policy.base_delay_ms > 0 {
                    std::thread::sleep(Duration::from_millis(
                        policy.base_delay_ms << attempt.min(8),
                    ));
                }
                last = Some(err);
            }
        }
    }
    Err(last.unwrap_or_else(|| BackendError::Transport(String::from("no attempt made"))))
}

// --- live HTTP backend ---

/// Chat-completions-style JSON-over-HTTP client. Requests are sent to
/// `{base_url}/chat/completions` with temperature 0 and an 8192-token cap
/// unless overridden.
pub struct HttpBackend {
    base_url: String,
    api_key: String,
    model: String,
    temperature: f64,
    max_tokens: u32,
    timeout: Duration,
}

impl HttpBackend {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: api_key.into(),
            model: model.into(),
            temperature: slidesmith_core::judge::DEFAULT_TEMPERATURE,
            max_tokens: slidesmith_core::judge::DEFAULT_MAX_TOKENS,
            timeout: Duration::from_secs(120),
        }
    }
}

impl ModelBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        // Image refs ride along as image_url content parts; plain requests
        // use a bare string content for wider endpoint compatibility.
        let content = if request.image_refs.is_empty() {
            serde_json::Value::String(request.prompt.clone())
        } else {
            let mut parts = vec![serde_json::json!({"type": "text", "text": request.prompt})];
            for r in &request.image_refs {
                parts.push(serde_json::json!({"type": "image_url", "image_url": {"url": r}}));
            }
            serde_json::Value::Array(parts)
        };
        let body = serde_json::json!({
            "model": self.model,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "messages": [{"role": "user", "content": content}],
        });

        let response = ureq::post(&format!("{}/chat/completions", self.base_url))
            .set("Authorization", &format!("Bearer {}", self.api_key))
            .set("Content-Type", "application/json")
            .timeout(self.timeout)
            .send_json(body);
        let response = match response {
            Ok(r) => r,
            Err(ureq::Error::Status(status, r)) => {
                return Err(BackendError::Http {
                    status,
                    body: r.into_string().unwrap_or_default(),
                })
            }
            Err(e) => return Err(BackendError::Transport(e.to_string())),
        };
        let parsed: serde_json::Value = response
            .into_json()
            .map_err(|e| BackendError::BadResponse(e.to_string()))?;
        parsed["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                BackendError::BadResponse(String::from("no choices[0].message.content"))
            })
    }

    fn identity(&self) -> &str {
        &self.model
    }
}

// --- scripted backend (test fixture) ---

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptFile {
    /// tag -> scripted behavior.
    responses: HashMap<String, ScriptEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
enum ScriptEntry {
    /// Responses consumed front to back; exhaustion is an error.
    #[serde(rename = "queue")]
    Queue(Vec<String>),
    /// The same response for every call with this tag.
    #[serde(rename = "always")]
    Always(String),
}

/// Deterministic fixture backend. Tags present in the script are served
/// from it; other tags go to the fallback backend, or fail when there is
/// none. This keeps failure-injection scripts down to the calls they
/// actually bend.
pub struct ScriptedBackend {
    queues: Mutex<HashMap<String, VecDeque<String>>>,
    always: HashMap<String, String>,
    fallback: Option<Box<dyn ModelBackend>>,
    name: String,
}

impl ScriptedBackend {
    pub fn from_json(script: &str) -> Result<Self, BackendError> {
        let file: ScriptFile = serde_json::from_str(script)
            .map_err(|e| BackendError::BadResponse(format!("script: {e}")))?;
        let mut queues = HashMap::new();
        let mut always = HashMap::new();
        for (tag, entry) in file.responses {
            match entry {
                ScriptEntry::Queue(items) => {
                    queues.insert(tag, items.into());
                }
                ScriptEntry::Always(text) => {
                    always.insert(tag, text);
                }
            }
        }
        Ok(Self {
            queues: Mutex::new(queues),
            always,
            fallback: None,
            name: String::from("scripted"),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Transport(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Route unscripted tags to `fallback` instead of failing.
    pub fn with_fallback(mut self, fallback: Box<dyn ModelBackend>) -> Self {
        self.fallback = Some(fallback);
        self
    }
}

impl ModelBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        if let Some(text) = self.always.get(&request.tag) {
            return Ok(text.clone());
        }
        let mut queues = self.queues.lock().expect("script lock");
        if let Some(queue) = queues.get_mut(&request.tag) {
            return queue.pop_front().ok_or_else(|| BackendError::Script {
                tag: request.tag.clone(),
                reason: String::from("queue exhausted"),
            });
        }
        drop(queues);
        match &self.fallback {
            Some(backend) => backend.complete(request),
            None => Err(BackendError::Script {
                tag: request.tag.clone(),
                reason: String::from("tag not scripted"),
            }),
        }
    }

    fn identity(&self) -> &str {
        &self.name
    }
}

// --- search ---

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SearchHit {
    pub url: String,
    pub snippet: String,
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("all search queries failed: {0}")]
    AllQueriesFailed(String),
    #[error("search transport failure: {0}")]
    Transport(String),
}

pub trait SearchClient: Send + Sync {
    fn search(&self, query: &str) -> Result<Vec<SearchHit>, SearchError>;
    fn fetch_summary(&self, url: &str) -> Result<String, SearchError>;
}

/// Fixture search: query substring -> hits, url -> summary. Unknown queries
/// return no hits (not an error), mirroring a thin result page.
#[derive(Debug, Default, Deserialize)]
pub struct FixtureSearch {
    #[serde(default)]
    hits: HashMap<String, Vec<SearchHit>>,
    #[serde(default)]
    summaries: HashMap<String, String>,
}

impl FixtureSearch {
    pub fn from_json(text: &str) -> Result<Self, SearchError> {
        serde_json::from_str(text).map_err(|e| SearchError::Transport(format!("fixture: {e}")))
    }
}

impl SearchClient for FixtureSearch {
    fn search(&self, query: &str) -> Result<Vec<SearchHit>, SearchError> {
        for (needle, hits) in &self.hits {
            if query.contains(needle.as_str()) {
                return Ok(hits.clone());
            }
        }
        Ok(Vec::new())
    }

    fn fetch_summary(&self, url: &str) -> Result<String, SearchError> {
        Ok(self
            .summaries
            .get(url)
            .cloned()
            .unwrap_or_else(|| format!("No summary recorded for {url}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(&'static str);
    impl ModelBackend for Fixed {
        fn complete(&self, _request: &ChatRequest) -> Result<String, BackendError> {
            Ok(self.0.to_string())
        }
        fn identity(&self) -> &str {
            "fixed"
        }
    }

    #[test]
    fn scripted_queue_serves_in_order_then_errors() {
        let backend = ScriptedBackend::from_json(
            r#"{"responses": {"design.1": {"queue": ["first", "second"]}}}"#,
        )
        .unwrap();
        let req = ChatRequest::new("design.1", "p");
        assert_eq!(backend.complete(&req).unwrap(), "first");
        assert_eq!(backend.complete(&req).unwrap(), "second");
        assert!(matches!(
            backend.complete(&req),
            Err(BackendError::Script { .. })
        ));
    }

    #[test]
    fn scripted_always_repeats_and_fallback_covers_the_rest() {
        let backend = ScriptedBackend::from_json(
            r#"{"responses": {"judge.layout": {"always": "SCORE: 4"}}}"#,
        )
        .unwrap()
        .with_fallback(Box::new(Fixed("fallback text")));
        let scripted = ChatRequest::new("judge.layout", "p");
        assert_eq!(backend.complete(&scripted).unwrap(), "SCORE: 4");
        assert_eq!(backend.complete(&scripted).unwrap(), "SCORE: 4");
        let other = ChatRequest::new("design.1", "p");
        assert_eq!(backend.complete(&other).unwrap(), "fallback text");
    }

    #[test]
    fn unscripted_tag_without_fallback_is_an_error() {
        let backend = ScriptedBackend::from_json(r#"{"responses": {}}"#).unwrap();
        let req = ChatRequest::new("anything", "p");
        match backend.complete(&req) {
            Err(BackendError::Script { tag, .. }) => assert_eq!(tag, "anything"),
            other => panic!("expected Script error, got {other:?}"),
        }
    }

    #[test]
    fn retry_gives_up_after_max_attempts() {
        struct Failing(Mutex<u32>);
        impl ModelBackend for Failing {
            fn complete(&self, _request: &ChatRequest) -> Result<String, BackendError> {
                *self.0.lock().unwrap() += 1;
                Err(BackendError::Transport(String::from("down")))
            }
            fn identity(&self) -> &str {
                "failing"
            }
        }
        let backend = Failing(Mutex::new(0));
        let policy = RetryPolicy { max_attempts: 3, base_delay_ms: 0 };
        let req = ChatRequest::new("t", "p");
        assert!(complete_with_retry(&backend, &req, policy).is_err());
        assert_eq!(*backend.0.lock().unwrap(), 3);
    }

    #[test]
    fn retry_recovers_from_transient_failures() {
        struct FlakyOnce(Mutex<u32>);
        impl ModelBackend for FlakyOnce {
            fn complete(&self, _request: &ChatRequest) -> Result<String, BackendError> {
                let mut calls = self.0.lock().unwrap();
                *calls += 1;
                if *calls == 1 {
                    Err(BackendError::Transport(String::from("blip")))
                } else {
                    Ok(String::from("ok"))
                }
            }
            fn identity(&self) -> &str {
                "flaky"
            }
        }
        let backend = FlakyOnce(Mutex::new(0));
        let policy = RetryPolicy { max_attempts: 3, base_delay_ms: 0 };
        let req = ChatRequest::new("t", "p");
        assert_eq!(complete_with_retry(&backend, &req, policy).unwrap(), "ok");
    }

    #[test]
    fn fixture_search_matches_by_substring() {
        let search = FixtureSearch::from_json(
            r#"{
                "hits": {"glaciers": [
                    {"url": "https://a.test/1", "snippet": "ice"},
                    {"url": "https://a.test/2", "snippet": "melt"},
                    {"url": "https://a.test/3", "snippet": "flow"}
                ]},
                "summaries": {"https://a.test/1": "Long-form notes."}
            }"#,
        )
        .unwrap();
        let hits = search.search("alpine glaciers retreat").unwrap();
        assert_eq!(hits.len(), 3);
        assert_eq!(search.fetch_summary("https://a.test/1").unwrap(), "Long-form notes.");
        assert!(search.search("unrelated").unwrap().is_empty());
    }
}
