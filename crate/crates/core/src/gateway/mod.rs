//! Uniform access to chat-completion and text-embedding providers.
//!
//! A [`Gateway`] owns one retrying, rate-limited [`ChatClient`] per role plus
//! an [`EmbeddingClient`]. Providers are swappable behind [`ChatProvider`] and
//! [`EmbeddingProvider`]; the offline backend lives in [`mock`], the wire
//! backend in [`http`].

pub mod http;
pub mod limiter;
pub mod mock;
pub mod templates;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::derive_seed;

pub use limiter::{Clock, RateLimiter, SystemClock, VirtualClock};
pub use mock::{MockChat, MockEmbedding};
pub use templates::{
    Bindings, RoleId, RoleTemplate, SamplingParams, TemplateRegistry, NEUTRAL_SYSTEM_PROMPT,
};

/// Who is speaking in a chat message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageRole {
    System,
    User,
    Assistant,
}

impl MessageRole {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageRole::System => "system",
            MessageRole::User => "user",
            MessageRole::Assistant => "assistant",
        }
    }
}

/// One turn of a chat-completion conversation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: MessageRole,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: MessageRole::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: MessageRole::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: MessageRole::Assistant,
            content: content.into(),
        }
    }
}

/// A fully assembled provider request.
#[derive(Debug, Clone)]
pub struct ChatRequest {
    /// Role label, e.g. "judge" or "evaluated"; selects the mock grammar and
    /// tags captured requests.
    pub label: String,
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

pub trait ChatProvider: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<String>;
}

pub type Embedding = Vec<f64>;

pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>>;
}

/// Where a provider's traffic goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Http,
    #[default]
    Mock,
}

/// Endpoint settings for one role (or the embedder, or an evaluated model).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    #[serde(default)]
    pub base_url: String,
    #[serde(default = "default_model_name")]
    pub model_name: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_requests_per_minute")]
    pub requests_per_minute: u32,
    #[serde(default)]
    pub backend: Backend,
}

fn default_model_name() -> String {
    "mock".to_string()
}

fn default_api_key_env() -> String {
    "ALIGNLAB_API_KEY".to_string()
}

fn default_max_retries() -> u32 {
    3
}

fn default_requests_per_minute() -> u32 {
    60
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            base_url: String::new(),
            model_name: default_model_name(),
            api_key_env: default_api_key_env(),
            max_retries: default_max_retries(),
            requests_per_minute: default_requests_per_minute(),
            backend: Backend::Mock,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self, label: &str) -> Result<()> {
        if self.max_retries > 8 {
            return Err(Error::Config(format!(
                "{label}: max_retries {} exceeds the limit of 8",
                self.max_retries
            )));
        }
        if self.requests_per_minute == 0 {
            return Err(Error::Config(format!(
                "{label}: requests_per_minute must be positive"
            )));
        }
        if self.backend == Backend::Http {
            if !self.base_url.starts_with("http://") && !self.base_url.starts_with("https://") {
                return Err(Error::Config(format!(
                    "{label}: http backend needs a base_url starting with http:// or https://"
                )));
            }
            if self.model_name.is_empty() {
                return Err(Error::Config(format!("{label}: model_name must be set")));
            }
        }
        Ok(())
    }

    /// The API key, if the named environment variable is set. Keys are never
    /// read from the config file itself and never logged.
    pub fn api_key(&self) -> Option<String> {
        std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty())
    }
}

/// Captured copy of an outbound request, for tests that assert on what each
/// role was allowed to see.
#[derive(Debug, Clone)]
pub struct CapturedRequest {
    pub label: String,
    pub messages: Vec<ChatMessage>,
}

impl CapturedRequest {
    /// Concatenated text of every message in the request.
    pub fn full_text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Shared sink for outbound chat requests.
#[derive(Clone, Default)]
pub struct RequestLog {
    inner: Arc<Mutex<Vec<CapturedRequest>>>,
}

impl RequestLog {
    pub fn new() -> Self {
        Self::default()
    }

    fn record(&self, request: &ChatRequest) {
        self.inner.lock().unwrap().push(CapturedRequest {
            label: request.label.clone(),
            messages: request.messages.clone(),
        });
    }

    pub fn snapshot(&self) -> Vec<CapturedRequest> {
        self.inner.lock().unwrap().clone()
    }

    pub fn for_label(&self, label: &str) -> Vec<CapturedRequest> {
        self.snapshot()
            .into_iter()
            .filter(|r| r.label == label)
            .collect()
    }

    pub fn clear(&self) {
        self.inner.lock().unwrap().clear();
    }
}

/// Substitute `{Name}` placeholders in a single pass. Substituted values are
/// never re-scanned, so braces inside bindings are inert.
pub fn render_template(template: &str, bindings: &Bindings) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    let mut offset = 0;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or(Error::TemplateSyntax {
            offset: offset + open,
        })?;
        let name = &after[..close];
        let value = bindings.get(name).ok_or_else(|| Error::MissingBinding {
            name: name.to_string(),
        })?;
        out.push_str(value);
        let consumed = open + 1 + close + 1;
        offset += consumed;
        rest = &rest[consumed..];
    }
    out.push_str(rest);
    Ok(out)
}

/// One binding, by value. Convenience for building [`Bindings`] maps.
pub fn bindings(pairs: &[(&str, &str)]) -> Bindings {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// A retrying, rate-limited connection to one chat endpoint.
pub struct ChatClient {
    label: String,
    model: String,
    provider: Arc<dyn ChatProvider>,
    max_retries: u32,
    limiter: Option<Arc<RateLimiter>>,
    clock: Arc<dyn Clock>,
    backoff_base: Duration,
    backoff_cap: Duration,
    jitter: Mutex<ChaCha8Rng>,
    log: Option<RequestLog>,
}

impl ChatClient {
    pub fn new(
        label: impl Into<String>,
        model: impl Into<String>,
        provider: Arc<dyn ChatProvider>,
        max_retries: u32,
        limiter: Option<Arc<RateLimiter>>,
        clock: Arc<dyn Clock>,
        jitter_seed: u64,
    ) -> Self {
        Self {
            label: label.into(),
            model: model.into(),
            provider,
            max_retries,
            limiter,
            clock,
            backoff_base: Duration::from_millis(500),
            backoff_cap: Duration::from_secs(30),
            jitter: Mutex::new(ChaCha8Rng::seed_from_u64(jitter_seed)),
            log: None,
        }
    }

    /// Build a client for the given provider settings. Mock backends skip the
    /// rate limiter; http backends get a fresh sliding-window limiter.
    pub fn from_config(
        label: &str,
        config: &ProviderConfig,
        mock_seed: u64,
        clock: Arc<dyn Clock>,
        log: Option<RequestLog>,
    ) -> Result<Arc<Self>> {
        config.validate(label)?;
        let (provider, limiter): (Arc<dyn ChatProvider>, _) = match config.backend {
            Backend::Mock => (Arc::new(MockChat::new(mock_seed)), None),
            Backend::Http => (
                Arc::new(http::HttpChat::new(&config.base_url, config.api_key())),
                Some(Arc::new(RateLimiter::per_minute(
                    config.requests_per_minute,
                    clock.clone(),
                ))),
            ),
        };
        let mut client = Self::new(
            label,
            config.model_name.clone(),
            provider,
            config.max_retries,
            limiter,
            clock,
            derive_seed(mock_seed, &["jitter", label]),
        );
        client.log = log;
        Ok(Arc::new(client))
    }

    pub fn with_log(mut self, log: RequestLog) -> Self {
        self.log = Some(log);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    fn backoff(&self, attempt: u32) {
        let exp = self
            .backoff_base
            .saturating_mul(1u32 << attempt.min(10));
        let factor = self.jitter.lock().unwrap().random_range(0.5..1.5);
        let wait = exp.mul_f64(factor).min(self.backoff_cap);
        self.clock.sleep(wait);
    }

    /// Send the conversation; retry transient failures and blank completions
    /// with jittered exponential backoff.
    pub fn chat(&self, messages: Vec<ChatMessage>, sampling: &SamplingParams) -> Result<String> {
        let request = ChatRequest {
            label: self.label.clone(),
            model: self.model.clone(),
            messages,
            temperature: sampling.temperature,
            max_tokens: sampling.max_tokens,
        };
        if let Some(log) = &self.log {
            log.record(&request);
        }
        let attempts = self.max_retries + 1;
        let mut last_empty = false;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if let Some(limiter) = &self.limiter {
                limiter.acquire();
            }
            match self.provider.chat(&request) {
                Ok(text) if !text.trim().is_empty() => return Ok(text),
                Ok(_) => {
                    last_empty = true;
                    last_error = "empty completion".to_string();
                }
                Err(Error::ProviderTransient(message)) => {
                    last_empty = false;
                    last_error = message;
                }
                Err(fatal) => return Err(fatal),
            }
            if attempt + 1 < attempts {
                log::debug!(
                    "{}: attempt {} failed ({last_error}), backing off",
                    self.label,
                    attempt + 1
                );
                self.backoff(attempt);
            }
        }
        if last_empty {
            Err(Error::EmptyCompletion)
        } else {
            Err(Error::ProviderExhausted {
                attempts,
                last_error,
            })
        }
    }
}

/// Cosine similarity, clamped to [-1, 1] against rounding.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

fn normalize(mut v: Embedding) -> Result<Embedding> {
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    for x in &mut v {
        *x /= norm;
    }
    Ok(v)
}

/// Retrying wrapper over an embedding provider; output vectors are unit
/// normalized so cosine reduces to a dot product.
pub struct EmbeddingClient {
    provider: Arc<dyn EmbeddingProvider>,
    max_retries: u32,
    limiter: Option<Arc<RateLimiter>>,
    clock: Arc<dyn Clock>,
}

impl EmbeddingClient {
    pub fn new(
        provider: Arc<dyn EmbeddingProvider>,
        max_retries: u32,
        limiter: Option<Arc<RateLimiter>>,
        clock: Arc<dyn Clock>,
    ) -> Self {
        Self {
            provider,
            max_retries,
            limiter,
            clock,
        }
    }

    pub fn from_config(config: &ProviderConfig, clock: Arc<dyn Clock>) -> Result<Self> {
        config.validate("embedding")?;
        let (provider, limiter): (Arc<dyn EmbeddingProvider>, _) = match config.backend {
            Backend::Mock => (Arc::new(MockEmbedding::new()), None),
            Backend::Http => (
                Arc::new(http::HttpEmbedding::new(
                    &config.base_url,
                    &config.model_name,
                    config.api_key(),
                )),
                Some(Arc::new(RateLimiter::per_minute(
                    config.requests_per_minute,
                    clock.clone(),
                ))),
            ),
        };
        Ok(Self::new(provider, config.max_retries, limiter, clock))
    }

    pub fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>> {
        if texts.is_empty() {
            return Err(Error::EmptyInput("texts"));
        }
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(Error::EmptyInput("embedding text"));
        }
        let attempts = self.max_retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if let Some(limiter) = &self.limiter {
                limiter.acquire();
            }
            match self.provider.embed(texts) {
                Ok(vectors) => {
                    let dim = vectors.first().map(Vec::len).unwrap_or(0);
                    for v in &vectors {
                        if v.len() != dim {
                            return Err(Error::DimensionMismatch {
                                expected: dim,
                                actual: v.len(),
                            });
                        }
                    }
                    return vectors.into_iter().map(normalize).collect();
                }
                Err(Error::ProviderTransient(message)) => last_error = message,
                Err(fatal) => return Err(fatal),
            }
            if attempt + 1 < attempts {
                self.clock
                    .sleep(Duration::from_millis(500).saturating_mul(1 << attempt.min(10)));
            }
        }
        Err(Error::ProviderExhausted {
            attempts,
            last_error,
        })
    }
}

/// One chat client per role, a template registry, and an embedder.
pub struct Gateway {
    clients: BTreeMap<RoleId, Arc<ChatClient>>,
    templates: TemplateRegistry,
    embedder: EmbeddingClient,
    log: RequestLog,
}

impl Gateway {
    pub fn new(
        clients: BTreeMap<RoleId, Arc<ChatClient>>,
        templates: TemplateRegistry,
        embedder: EmbeddingClient,
        log: RequestLog,
    ) -> Self {
        Self {
            clients,
            templates,
            embedder,
            log,
        }
    }

    /// Fully offline gateway: every role served by the deterministic mock.
    pub fn mock(seed: u64) -> Self {
        Self::from_providers(
            Arc::new(MockChat::new(seed)),
            Arc::new(MockEmbedding::new()),
            seed,
        )
    }

    /// Route every role to the same chat provider. Used by the mock backend
    /// and by tests with scripted providers.
    pub fn from_providers(
        chat: Arc<dyn ChatProvider>,
        embed: Arc<dyn EmbeddingProvider>,
        seed: u64,
    ) -> Self {
        let clock: Arc<dyn Clock> = Arc::new(SystemClock);
        let log = RequestLog::new();
        let mut clients = BTreeMap::new();
        for role in RoleId::ALL {
            let client = ChatClient::new(
                role.as_str(),
                "mock",
                chat.clone(),
                2,
                None,
                clock.clone(),
                derive_seed(seed, &["jitter", role.as_str()]),
            )
            .with_log(log.clone());
            clients.insert(role, Arc::new(client));
        }
        let embedder = EmbeddingClient::new(embed, 2, None, clock);
        Self::new(clients, TemplateRegistry::defaults(), embedder, log)
    }

    pub fn templates(&self) -> &TemplateRegistry {
        &self.templates
    }

    pub fn set_template(&mut self, template: RoleTemplate) {
        self.templates.set(template);
    }

    pub fn request_log(&self) -> &RequestLog {
        &self.log
    }

    pub fn client(&self, role: RoleId) -> Result<&Arc<ChatClient>> {
        self.clients
            .get(&role)
            .ok_or_else(|| Error::UnknownRole(role.as_str().to_string()))
    }

    /// Render the role's template with `bindings`, append `history` and the
    /// optional templated user message, and complete.
    pub fn complete(
        &self,
        role: RoleId,
        bindings: &Bindings,
        history: &[ChatMessage],
    ) -> Result<String> {
        let template = self
            .templates
            .get(role)
            .ok_or_else(|| Error::UnknownRole(role.as_str().to_string()))?
            .clone();
        self.complete_with_template(&template, bindings, history)
    }

    /// Like [`Gateway::complete`] but with an explicit template, for callers
    /// that swap system prompts under one role.
    pub fn complete_with_template(
        &self,
        template: &RoleTemplate,
        bindings: &Bindings,
        history: &[ChatMessage],
    ) -> Result<String> {
        let client = self.client(template.role_id)?;
        let mut messages = Vec::with_capacity(history.len() + 2);
        messages.push(ChatMessage::system(render_template(
            &template.system_prompt,
            bindings,
        )?));
        messages.extend_from_slice(history);
        if let Some(user_template) = &template.user_template {
            messages.push(ChatMessage::user(render_template(user_template, bindings)?));
        }
        client.chat(messages, &template.sampling)
    }

    pub fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>> {
        self.embedder.embed(texts)
    }
}
