//! Completion backends and response parsing.
//!
//! [`HttpBackend`] talks to a chat-completion endpoint using the common
//! hosted-LLM message schema (system + user messages, temperature,
//! max_tokens). [`MockBackend`] answers from a fixture keyed by clause id and
//! is what the test suite and offline benchmarks use.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::prompt::{ANSWER_PREFIX, CATEGORIES_PREFIX, CLAUSE_ID_PREFIX};
use crate::registry::{parse_signature, CanonicalKey, FunctionCategory, FunctionRegistry, FunctionSignature};

pub const API_KEY_ENV: &str = "FUNCMAPPER_API_KEY";
pub const MOCK_SCHEMA: &str = "funcmapper.mock/1";

const SYSTEM_MESSAGE: &str =
    "You identify atomic rule-checking functions for building code clauses.";

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("invalid completion config: {0}")]
    Config(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("authentication rejected by endpoint (HTTP {status})")]
    Authentication { status: u16 },
    #[error("endpoint reports context overflow: {0}")]
    ContextOverflow(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("unexpected response body: {0}")]
    MalformedResponse(String),
    #[error("mock fixture does not parse: {0}")]
    Fixture(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            backoff_ms: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompletionConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f32,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
    /// Never serialized; read from [`API_KEY_ENV`] when absent.
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o-mini".into(),
            temperature: 0.0,
            max_tokens: 512,
            timeout_secs: 60,
            retry: RetryPolicy::default(),
            max_in_flight: 4,
            api_key: None,
        }
    }
}

impl CompletionConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::Config(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.retry.attempts < 1 {
            return Err(LlmError::Config("retry attempts must be >= 1".into()));
        }
        if self.max_in_flight < 1 {
            return Err(LlmError::Config("max_in_flight must be >= 1".into()));
        }
        Ok(())
    }

    pub fn resolved_api_key(&self) -> Option<String> {
        self.api_key
            .clone()
            .or_else(|| std::env::var(API_KEY_ENV).ok())
            .filter(|k| !k.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionRequest {
    pub correlation_id: String,
    pub prompt: String,
}

pub trait CompletionBackend: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError>;
}

// ------------------------------------------------------------------- http

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f32,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: Option<String>,
}

pub struct HttpBackend {
    config: CompletionConfig,
    client: reqwest::blocking::Client,
}

enum Attempt {
    Done(String),
    Retry(String),
    Fail(LlmError),
}

impl HttpBackend {
    pub fn new(config: CompletionConfig) -> Result<Self, LlmError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(Self { config, client })
    }

    fn attempt(&self, body: &ChatRequest<'_>, api_key: Option<&str>) -> Attempt {
        let mut request = self.client.post(&self.config.endpoint).json(body);
        if let Some(key) = api_key {
            request = request.bearer_auth(key);
        }
        let response = match request.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = response.status().as_u16();
        let text = response.text().unwrap_or_default();
        match status {
            200..=299 => match serde_json::from_str::<ChatResponse>(&text) {
                Ok(parsed) => match parsed.choices.into_iter().next().and_then(|c| c.message.content) {
                    Some(content) => Attempt::Done(content),
                    None => Attempt::Fail(LlmError::MalformedResponse("no choices".into())),
                },
                Err(e) => Attempt::Fail(LlmError::MalformedResponse(e.to_string())),
            },
            401 | 403 => Attempt::Fail(LlmError::Authentication { status }),
            400 | 413 if is_context_overflow(&text) => Attempt::Fail(LlmError::ContextOverflow(text)),
            408 | 429 | 500..=599 => Attempt::Retry(format!("HTTP {status}: {text}")),
            _ => Attempt::Fail(LlmError::Http { status, body: text }),
        }
    }
}

fn is_context_overflow(body: &str) -> bool {
    let lower = body.to_lowercase();
    lower.contains("context_length_exceeded")
        || lower.contains("context length")
        || lower.contains("maximum context")
        || lower.contains("too many tokens")
}

impl CompletionBackend for HttpBackend {
    fn name(&self) -> &str {
        "live"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        let api_key = self.config.resolved_api_key();
        let body = ChatRequest {
            model: &self.config.model,
            messages: vec![
                ChatMessage {
                    role: "system",
                    content: SYSTEM_MESSAGE,
                },
                ChatMessage {
                    role: "user",
                    content: &request.prompt,
                },
            ],
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };
        let attempts = self.config.retry.attempts;
        let mut last = String::new();
        for attempt in 1..=attempts {
            match self.attempt(&body, api_key.as_deref()) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fail(err) => return Err(err),
                Attempt::Retry(message) => {
                    warn!(
                        "request {} attempt {attempt}/{attempts} failed: {message}",
                        request.correlation_id
                    );
                    last = message;
                    if attempt < attempts {
                        let backoff = self.config.retry.backoff_ms * u64::from(attempt);
                        thread::sleep(Duration::from_millis(backoff));
                    }
                }
            }
        }
        Err(LlmError::Transport {
            attempts,
            message: last,
        })
    }
}

// ------------------------------------------------------------------- mock

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockEntry {
    pub clause_id: String,
    pub response: String,
    /// Used instead of `response` when the prompt's database part was
    /// narrowed to fewer than all categories.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refined_response: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockFixture {
    pub schema: String,
    pub fallback: String,
    pub responses: Vec<MockEntry>,
}

impl MockFixture {
    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let fixture: MockFixture =
            serde_json::from_str(text).map_err(|e| LlmError::Fixture(e.to_string()))?;
        if fixture.schema != MOCK_SCHEMA {
            return Err(LlmError::Fixture(format!("unsupported schema `{}`", fixture.schema)));
        }
        Ok(fixture)
    }

    pub fn entry(&self, clause_id: &str) -> Option<&MockEntry> {
        self.responses.iter().find(|e| e.clause_id == clause_id)
    }
}

/// Pulls the clause id out of a rendered prompt's analysis part.
pub fn prompt_clause_id(prompt_text: &str) -> Option<&str> {
    prompt_text
        .lines()
        .rev()
        .find_map(|l| l.strip_prefix(CLAUSE_ID_PREFIX))
        .map(str::trim)
}

/// True when the rendered prompt's database part lists fewer than all
/// categories.
pub fn prompt_is_refined(prompt_text: &str) -> bool {
    prompt_text
        .lines()
        .find_map(|l| l.strip_prefix(CATEGORIES_PREFIX))
        .map(|list| {
            let listed: HashSet<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            FunctionCategory::ALL.iter().any(|c| !listed.contains(c.name()))
        })
        .unwrap_or(false)
}

/// Pure fixture lookup; unknown clause ids get the fixture's fallback.
pub fn mock_complete(prompt_text: &str, fixture: &MockFixture) -> String {
    let Some(entry) = prompt_clause_id(prompt_text).and_then(|id| fixture.entry(id)) else {
        return fixture.fallback.clone();
    };
    match (&entry.refined_response, prompt_is_refined(prompt_text)) {
        (Some(refined), true) => refined.clone(),
        _ => entry.response.clone(),
    }
}

pub struct MockBackend {
    fixture: MockFixture,
}

impl MockBackend {
    pub fn new(fixture: MockFixture) -> Self {
        Self { fixture }
    }
}

impl CompletionBackend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        Ok(mock_complete(&request.prompt, &self.fixture))
    }
}

/// Runs `requests` with at most `max_in_flight` outstanding at once. Results
/// come back in request order, each tagged with its correlation id.
pub fn complete_all(
    backend: &dyn CompletionBackend,
    requests: &[CompletionRequest],
    max_in_flight: usize,
) -> Vec<(String, Result<String, LlmError>)> {
    let workers = max_in_flight.max(1).min(requests.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<String, LlmError>>>> =
        Mutex::new((0..requests.len()).map(|_| None).collect());
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(request) = requests.get(i) else { break };
                let result = backend.complete(request);
                slots.lock().expect("result slots")[i] = Some(result);
            });
        }
    });
    let slots = slots.into_inner().expect("result slots");
    requests
        .iter()
        .zip(slots)
        .map(|(r, slot)| (r.correlation_id.clone(), slot.expect("every request completes")))
        .collect()
}

// ---------------------------------------------------------------- parsing

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifiedFunction {
    pub raw_text: String,
    pub parsed: Option<FunctionSignature>,
    pub resolved_key: Option<CanonicalKey>,
    pub in_registry: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedFunctionList {
    pub clause_id: String,
    pub items: Vec<IdentifiedFunction>,
}

impl RankedFunctionList {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Keys of the first `k` items; unresolved items yield `None` but still
    /// take a rank.
    pub fn top_k(&self, k: usize) -> impl Iterator<Item = Option<&CanonicalKey>> {
        self.items
            .iter()
            .take(k)
            .map(|i| if i.in_registry { i.resolved_key.as_ref() } else { None })
    }
}

fn answer_line() -> Regex {
    let word = regex::escape(ANSWER_PREFIX.trim_end_matches(':'));
    Regex::new(&format!(
        r"(?i)^\s*(?:[-*•]\s*|\d+[.)]\s*)?\**\s*{word}\s*\**\s*[:：]\s*\**\s*(.+?)\s*$"
    ))
    .expect("static regex")
}

/// Extracts every `FUNCTION: <signature>` line in emission order.
///
/// Signatures that do not parse or do not resolve are kept with
/// `in_registry = false`. Lines with no parenthesised argument list are
/// skipped. Later duplicates of an already seen function are dropped.
pub fn parse_identifications(
    response: &str,
    registry: &FunctionRegistry,
    clause_id: &str,
) -> RankedFunctionList {
    let line_re = answer_line();
    let mut items = Vec::new();
    let mut seen_keys = HashSet::new();
    let mut seen_raw = HashSet::new();
    for line in response.lines() {
        let Some(cap) = line_re.captures(line) else { continue };
        let raw = cap[1]
            .trim_matches(|c: char| matches!(c, '`' | '*' | ';' | '.') || c.is_whitespace())
            .to_string();
        let raw = strip_output_prefix(&raw);
        if !(raw.contains('(') && raw.contains(')')) {
            debug!("{clause_id}: skipping malformed answer line `{line}`");
            continue;
        }
        let parsed = match parse_signature(&raw) {
            Ok(sig) => Some(sig),
            Err(e) => {
                debug!("{clause_id}: unparsable signature `{raw}`: {e}");
                None
            }
        };
        let resolved_key = parsed.as_ref().map(FunctionSignature::canonical_key);
        let duplicate = match &resolved_key {
            Some(key) => !seen_keys.insert(key.clone()),
            None => {
                let norm: String = raw.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
                !seen_raw.insert(norm)
            }
        };
        if duplicate {
            debug!("{clause_id}: dropping duplicate `{raw}`");
            continue;
        }
        let in_registry = resolved_key.as_ref().is_some_and(|k| registry.contains(k));
        items.push(IdentifiedFunction {
            raw_text: raw,
            parsed,
            resolved_key,
            in_registry,
        });
    }
    RankedFunctionList {
        clause_id: clause_id.to_string(),
        items,
    }
}

/// Drops a leading category label or output type, as in
/// `existence: hasElement(...)` or `Float getSpaceDistance(...)`.
fn strip_output_prefix(raw: &str) -> String {
    let head_end = raw.find('(').unwrap_or(raw.len());
    let head = &raw[..head_end];
    let cut = head.rfind([':', ' ']).map_or(0, |i| i + 1);
    format!("{}{}", head[cut..].trim(), &raw[head_end..])
}
