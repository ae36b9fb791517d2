//! Live HTTP backend speaking the chat-completions wire format.
//!
//! Works against any server exposing a `/chat/completions`-style endpoint
//! (vLLM, llama.cpp server, OpenAI-compatible gateways). Images are sent as
//! base64 data URLs by default; URL mode passes the raw path through.

use std::path::Path;
use std::time::{Duration, Instant};

use base64::Engine;
use serde_json::{json, Value};

use super::{
    Backend, BackendError, ChatRequest, ChatResponse, MediaRef, Part, TokenUsage,
    DEFAULT_TIMEOUT_SECS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MediaEncoding {
    /// Inline base64 data URLs (works against local inference servers).
    Base64Inline,
    /// Pass the path string through as the image URL.
    Url,
}

pub struct LiveBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
    media_encoding: MediaEncoding,
}

impl LiveBackend {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Result<Self, BackendError> {
        Self::with_timeout(endpoint, api_key, Duration::from_secs(DEFAULT_TIMEOUT_SECS))
    }

    pub fn with_timeout(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(LiveBackend {
            client,
            endpoint: endpoint.into(),
            api_key,
            media_encoding: MediaEncoding::Base64Inline,
        })
    }

    pub fn media_encoding(mut self, encoding: MediaEncoding) -> Self {
        self.media_encoding = encoding;
        self
    }

    fn image_url(&self, path: &Path) -> Result<String, BackendError> {
        match self.media_encoding {
            MediaEncoding::Url => Ok(path.to_string_lossy().into_owned()),
            MediaEncoding::Base64Inline => {
                let bytes = std::fs::read(path)
                    .map_err(|_| BackendError::MissingFrame(path.to_path_buf()))?;
                let mime = match path.extension().and_then(|e| e.to_str()) {
                    Some("jpg") | Some("jpeg") => "image/jpeg",
                    Some("webp") => "image/webp",
                    _ => "image/png",
                };
                let encoded = base64::engine::general_purpose::STANDARD.encode(bytes);
                Ok(format!("data:{mime};base64,{encoded}"))
            }
        }
    }

    fn serialize(
        &self,
        request: &ChatRequest,
        media: Option<&MediaRef>,
    ) -> Result<Value, BackendError> {
        if let Some(media) = media {
            for path in &media.frame_paths {
                if !path.exists() {
                    return Err(BackendError::MissingFrame(path.clone()));
                }
            }
        }
        let user_count = request
            .messages
            .iter()
            .filter(|m| m.role == super::Role::User)
            .count();
        let mut messages = Vec::new();
        let mut users_seen = 0;
        for message in &request.messages {
            let mut content = Vec::new();
            for part in &message.parts {
                match part {
                    Part::Text { text } => content.push(json!({"type": "text", "text": text})),
                    Part::Image { path } => content.push(json!({
                        "type": "image_url",
                        "image_url": {"url": self.image_url(path)?}
                    })),
                }
            }
            if message.role == super::Role::User {
                users_seen += 1;
                // Frames attach to the last user message.
                if users_seen == user_count {
                    if let Some(media) = media {
                        for path in &media.frame_paths {
                            content.push(json!({
                                "type": "image_url",
                                "image_url": {"url": self.image_url(path)?}
                            }));
                        }
                    }
                }
            }
            messages.push(json!({"role": message.role.as_str(), "content": content}));
        }
        Ok(json!({
            "model": request.model_id,
            "temperature": request.temperature,
            "max_tokens": request.max_output,
            "messages": messages,
        }))
    }

    fn post_once(&self, body: &Value) -> Result<ChatResponse, BackendError> {
        let start = Instant::now();
        let mut builder = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status();
        let raw = response
            .text()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Status {
                status: status.as_u16(),
                body: raw,
            });
        }
        let (text, usage) = parse_completion(&raw)?;
        Ok(ChatResponse {
            text,
            usage,
            latency_ms: start.elapsed().as_millis() as u64,
        })
    }
}

/// Parse a chat-completions response body into its text and token usage.
pub fn parse_completion(raw: &str) -> Result<(String, Option<TokenUsage>), BackendError> {
    let parsed: Value =
        serde_json::from_str(raw).map_err(|e| BackendError::InvalidResponse(e.to_string()))?;
    let text = parsed["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| {
            BackendError::InvalidResponse("missing choices[0].message.content".into())
        })?
        .to_string();
    let usage = parsed.get("usage").and_then(|u| {
        Some(TokenUsage {
            prompt_tokens: u.get("prompt_tokens")?.as_u64()?,
            completion_tokens: u.get("completion_tokens")?.as_u64()?,
        })
    });
    Ok((text, usage))
}

impl Backend for LiveBackend {
    fn complete(
        &self,
        request: &ChatRequest,
        media: Option<&MediaRef>,
    ) -> Result<ChatResponse, BackendError> {
        let body = self.serialize(request, media)?;
        match self.post_once(&body) {
            // One retry on transport errors only, with a 2 s backoff.
            Err(BackendError::Transport(_)) => {
                std::thread::sleep(Duration::from_secs(2));
                self.post_once(&body)
            }
            other => other,
        }
    }
}
