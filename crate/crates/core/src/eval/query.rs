//! Talking to a model: endpoint settings, failure classes and retries.
//!
//! The HTTP client itself lives in the command-line crate; this module only
//! sees the [`Transport`] trait so the retry logic can be tested offline.

use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelEndpointConfig {
    /// Chat-completions URL.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub token_env: String,
    pub max_completion_tokens: Option<u32>,
    pub temperature: Option<f64>,
    pub reasoning_effort: Option<String>,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
}

impl Default for ModelEndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1/chat/completions".into(),
            model: "o3-mini".into(),
            token_env: "OPENAI_API_KEY".into(),
            max_completion_tokens: Some(100_000),
            temperature: None,
            reasoning_effort: None,
            timeout_secs: 600,
            max_in_flight: 4,
        }
    }
}

impl ModelEndpointConfig {
    /// JSON body of one chat-completion request.
    pub fn request_body(&self, prompt: &str) -> Value {
        let mut body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
        });
        if let Some(n) = self.max_completion_tokens {
            body["max_completion_tokens"] = json!(n);
        }
        if let Some(t) = self.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(effort) = &self.reasoning_effort {
            body["reasoning_effort"] = json!(effort);
        }
        body
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    ServerError,
    ApiError,
    Connection,
    RateLimit,
    Timeout,
    Other,
}

impl ErrorClass {
    /// Failures that say nothing about the puzzle and are worth retrying.
    pub fn is_retryable(self) -> bool {
        matches!(
            self,
            ErrorClass::ServerError | ErrorClass::ApiError | ErrorClass::Connection | ErrorClass::RateLimit
        )
    }

    pub fn from_status(status: u16) -> ErrorClass {
        match status {
            429 => ErrorClass::RateLimit,
            408 => ErrorClass::Timeout,
            500..=599 => ErrorClass::ServerError,
            _ => ErrorClass::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryError {
    pub class: ErrorClass,
    pub message: String,
}

impl QueryError {
    pub fn new(class: ErrorClass, message: impl Into<String>) -> Self {
        Self {
            class,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for QueryError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}: {}", self.class, self.message)
    }
}

impl std::error::Error for QueryError {}

/// Pulls the assistant text out of a chat-completion response body.
pub fn extract_completion(body: &Value) -> Result<String, QueryError> {
    if let Some(err) = body.get("error") {
        return Err(QueryError::new(ErrorClass::ApiError, err.to_string()));
    }
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| QueryError::new(ErrorClass::ApiError, "response has no message content"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryRequest<'a> {
    pub id: &'a str,
    pub prompt: &'a str,
}

pub trait Transport: Send + Sync {
    fn complete(&self, request: &QueryRequest<'_>) -> Result<String, QueryError>;
}

pub trait Sleeper: Send + Sync {
    fn sleep(&self, duration: Duration);
}

pub struct ThreadSleeper;

impl Sleeper for ThreadSleeper {
    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Records requested sleeps instead of sleeping.
#[derive(Default)]
pub struct RecordingSleeper {
    pub sleeps: Mutex<Vec<Duration>>,
}

impl RecordingSleeper {
    pub fn recorded(&self) -> Vec<Duration> {
        self.sleeps.lock().expect("not poisoned").clone()
    }
}

impl Sleeper for RecordingSleeper {
    fn sleep(&self, duration: Duration) {
        self.sleeps.lock().expect("not poisoned").push(duration);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub wait: Duration,
    pub max_attempts: usize,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            wait: Duration::from_secs(5),
            max_attempts: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryOutcome {
    pub result: Result<String, QueryError>,
    pub attempts: usize,
    /// Failure class of every attempt that was retried.
    pub retried: Vec<ErrorClass>,
}

/// Sends one request, waiting and retrying on retryable failures.
pub fn query_model(
    transport: &dyn Transport,
    request: &QueryRequest<'_>,
    policy: RetryPolicy,
    sleeper: &dyn Sleeper,
) -> QueryOutcome {
    let mut retried = Vec::new();
    let mut attempts = 0;
    loop {
        attempts += 1;
        match transport.complete(request) {
            Ok(text) => {
                return QueryOutcome {
                    result: Ok(text),
                    attempts,
                    retried,
                }
            }
            Err(err) if err.class.is_retryable() && attempts < policy.max_attempts => {
                log::warn!("{}: attempt {attempts} failed ({err}), retrying", request.id);
                retried.push(err.class);
                sleeper.sleep(policy.wait);
            }
            Err(err) => {
                return QueryOutcome {
                    result: Err(err),
                    attempts,
                    retried,
                }
            }
        }
    }
}
