//! OpenAI-compatible wire backend.
//!
//! Chat: POST {base_url}/chat/completions, answer read from
//! choices[0].message.content. Embeddings: POST {base_url}/embeddings, vectors
//! read from data[i].embedding. Status 429 and 5xx map to transient errors so
//! the client retries them; other failures are fatal.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use crate::error::{Error, Result};

use super::{ChatProvider, ChatRequest, Embedding, EmbeddingProvider};

fn build_client() -> reqwest::blocking::Client {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(120))
        .build()
        .expect("default TLS backend available")
}

fn classify_status(status: u16, body: &str) -> Error {
    let mut summary = body.trim().replace('\n', " ");
    summary.truncate(200);
    let message = format!("http status {status}: {summary}");
    if status == 429 || (500..600).contains(&status) {
        Error::ProviderTransient(message)
    } else {
        Error::ProviderFatal(message)
    }
}

fn send_error(err: reqwest::Error) -> Error {
    Error::ProviderTransient(format!("request failed: {err}"))
}

pub struct HttpChat {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: Option<String>,
}

impl HttpChat {
    pub fn new(base_url: &str, api_key: Option<String>) -> Self {
        Self {
            client: build_client(),
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
        }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

impl ChatProvider for HttpChat {
    fn chat(&self, request: &ChatRequest) -> Result<String> {
        let body = json!({
            "model": request.model,
            "messages": request.messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let mut builder = self
            .client
            .post(format!("{}/chat/completions", self.base_url))
            .json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(send_error)?;
        let status = response.status().as_u16();
        let text = response.text().map_err(send_error)?;
        if !(200..300).contains(&status) {
            return Err(classify_status(status, &text));
        }
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| Error::ProviderFatal(format!("malformed chat response: {e}")))?;
        Ok(parsed
            .choices
            .first()
            .map(|c| c.message.content.clone())
            .unwrap_or_default())
    }
}

pub struct HttpEmbedding {
    client: reqwest::blocking::Client,
    base_url: String,
    model: String,
    api_key: Option<String>,
}

impl HttpEmbedding {
    pub fn new(base_url: &str, model: &str, api_key: Option<String>) -> Self {
        Self {
            client: build_client(),
            base_url: base_url.trim_end_matches('/').to_string(),
            model: model.to_string(),
            api_key,
        }
    }
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Embedding,
}

impl EmbeddingProvider for HttpEmbedding {
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>> {
        let body = json!({
            "model": self.model,
            "input": texts,
        });
        let mut builder = self
            .client
            .post(format!("{}/embeddings", self.base_url))
            .json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(send_error)?;
        let status = response.status().as_u16();
        let text = response.text().map_err(send_error)?;
        if !(200..300).contains(&status) {
            return Err(classify_status(status, &text));
        }
        let parsed: EmbeddingResponse = serde_json::from_str(&text)
            .map_err(|e| Error::ProviderFatal(format!("malformed embedding response: {e}")))?;
        Ok(parsed.data.into_iter().map(|d| d.embedding).collect())
    }
}
