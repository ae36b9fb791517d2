//! Backend abstraction shared by the answering VLM and the routing LLM.
//!
//! A [`Backend`] receives a [`ChatRequest`] plus optional [`MediaRef`] frames
//! and returns the raw model text. Implementations: [`live::LiveBackend`]
//! (chat-completions HTTP), [`replay::ReplayBackend`] (fixture lookup) and
//! [`mock::MockBackend`] (scripted).

pub mod live;
pub mod mock;
pub mod replay;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_TEMPERATURE: f64 = 0.3;
pub const DEFAULT_MAX_OUTPUT: u32 = 512;
pub const DEFAULT_TIMEOUT_SECS: u64 = 120;
/// Default number of frames sampled per scene.
pub const DEFAULT_FRAME_TARGET: usize = 16;

pub const COT_STAGE1_SUFFIX: &str = include_str!("../../templates/cot_stage1_suffix.txt");
pub const COT_STAGE2_SUFFIX: &str = include_str!("../../templates/cot_stage2_suffix.txt");
pub const BASELINE_PROMPT: &str = include_str!("../../templates/baseline_prompt.txt");

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),

    #[error("backend returned status {status}: {body}")]
    Status { status: u16, body: String },

    #[error("malformed backend response: {0}")]
    InvalidResponse(String),

    #[error("replay miss for key {key}")]
    ReplayMiss { key: String },

    #[error("frame does not exist: {0}")]
    MissingFrame(PathBuf),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<BackendError>,
    },

    #[error("mock error: {0}")]
    Mock(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Part {
    Text { text: String },
    Image { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub parts: Vec<Part>,
}

impl Message {
    pub fn text(role: Role, text: impl Into<String>) -> Self {
        Message {
            role,
            parts: vec![Part::Text { text: text.into() }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_output: u32,
    pub model_id: String,
}

impl ChatRequest {
    /// A single-user-message request with default decoding settings.
    pub fn user_text(model_id: impl Into<String>, text: impl Into<String>) -> Self {
        ChatRequest {
            messages: vec![Message::text(Role::User, text)],
            temperature: DEFAULT_TEMPERATURE,
            max_output: DEFAULT_MAX_OUTPUT,
            model_id: model_id.into(),
        }
    }

    pub fn media_part_count(&self) -> usize {
        self.messages
            .iter()
            .flat_map(|m| &m.parts)
            .filter(|p| matches!(p, Part::Image { .. }))
            .count()
    }

    /// All text content, in message order, joined with newlines.
    pub fn text_content(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            for p in &m.parts {
                if let Part::Text { text } = p {
                    if !out.is_empty() {
                        out.push('\n');
                    }
                    out.push_str(text);
                }
            }
        }
        out
    }
}

/// Ordered frame paths attached to a request at dispatch time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediaRef {
    pub frame_paths: Vec<PathBuf>,
}

impl MediaRef {
    pub fn new(frame_paths: Vec<PathBuf>) -> Result<Self, BackendError> {
        match frame_paths.is_empty() {
            true => Err(BackendError::InvalidResponse(
                "media reference must contain at least one frame".into(),
            )),
            false => Ok(MediaRef { frame_paths }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub usage: Option<TokenUsage>,
    pub latency_ms: u64,
}

pub trait Backend: Send + Sync {
    fn complete(
        &self,
        request: &ChatRequest,
        media: Option<&MediaRef>,
    ) -> Result<ChatResponse, BackendError>;
}

impl Backend for Box<dyn Backend> {
    fn complete(
        &self,
        request: &ChatRequest,
        media: Option<&MediaRef>,
    ) -> Result<ChatResponse, BackendError> {
        (**self).complete(request, media)
    }
}

/// Uniformly sample `target` frame indices from `available` frames.
///
/// `index_i = floor((i + 0.5) * available / target)`, deduplicated preserving
/// order; yields `min(target, available)` strictly increasing indices.
pub fn sample_frames(available: usize, target: usize) -> Vec<usize> {
    assert!(available >= 1 && target >= 1, "need at least one frame and a positive target");
    let mut indices = Vec::with_capacity(target.min(available));
    for i in 0..target {
        let idx = ((i as f64 + 0.5) * available as f64 / target as f64).floor() as usize;
        let idx = idx.min(available - 1);
        if indices.last() != Some(&idx) {
            indices.push(idx);
        }
    }
    indices
}

/// Canonical replay key: hex SHA-256 over the model id, the normalized
/// request text, and the ordered media basenames.
///
/// Bit-exact derivation:
/// 1. Start from `model_id`, then `"\n"`.
/// 2. For each message in order: `role` + `":"` + each text part with `\r\n`
///    and `\r` normalized to `\n`, each part followed by `"\n"`.
/// 3. `"media:"` + the basename of every image part in message order, then of
///    every `MediaRef` frame in order, each followed by `","`.
/// 4. Key = lowercase hex SHA-256 of the UTF-8 bytes of that string.
pub fn replay_key(request: &ChatRequest, media: Option<&MediaRef>) -> String {
    fn normalize(text: &str) -> String {
        text.replace("\r\n", "\n").replace('\r', "\n")
    }
    fn basename(path: &Path) -> &str {
        path.file_name().and_then(|n| n.to_str()).unwrap_or("")
    }
    let mut canon = String::new();
    canon.push_str(&request.model_id);
    canon.push('\n');
    for message in &request.messages {
        canon.push_str(message.role.as_str());
        canon.push(':');
        for part in &message.parts {
            if let Part::Text { text } = part {
                canon.push_str(&normalize(text));
                canon.push('\n');
            }
        }
    }
    canon.push_str("media:");
    for message in &request.messages {
        for part in &message.parts {
            if let Part::Image { path } = part {
                canon.push_str(basename(path));
                canon.push(',');
            }
        }
    }
    if let Some(media) = media {
        for path in &media.frame_paths {
            canon.push_str(basename(path));
            canon.push(',');
        }
    }
    let digest = Sha256::digest(canon.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        write!(hex, "{byte:02x}").unwrap();
    }
    hex
}

/// Decoding settings shared by requests the harness builds itself.
#[derive(Debug, Clone)]
pub struct RequestSettings {
    pub model_id: String,
    pub temperature: f64,
    pub max_output: u32,
}

impl
 RequestSettings {
    pub fn new(model_id: impl Into<String>) -> Self {
        RequestSettings {
            model_id: model_id.into(),
            temperature: DEFAULT_TEMPERATURE,
            max_output: DEFAULT_MAX_OUTPUT,
        }
    }

    pub fn request(&self, text: impl Into<String>) -> ChatRequest {
        ChatRequest {
            messages: vec![Message::text(Role::User, text)],
            temperature: self.temperature,
            max_output: self.max_output,
            model_id: self.model_id.clone(),
        }
    }
}

/// Outcome of the two-stage CoT dispatch.
#[derive(Debug, Clone)]
pub struct CotOutcome {
    /// Stage-1 reasoning text, carried verbatim into stage 2.
    pub reasoning: String,
    /// The stage-2 (final) response.
    pub response: ChatResponse,
}

/// Two-stage chain-of-thought: a reasoning turn whose output conditions a
/// second answer turn. Exactly two backend calls.
pub fn run_cot_two_stage(
    backend: &dyn Backend,
    media: Option<&MediaRef>,
    baseline_prompt: &str,
    settings: &RequestSettings,
) -> Result<CotOutcome, BackendError> {
    let stage1 = settings.request(format!("{baseline_prompt}\n{COT_STAGE1_SUFFIX}"));
    let reasoning = backend
        .complete(&stage1, media)
        .map_err(|e| BackendError::Stage { stage: "cot stage 1", source: Box::new(e) })?
        .text;
    let stage2 = settings.request(format!("{baseline_prompt}\n{reasoning}\n{COT_STAGE2_SUFFIX}"));
    let response = backend
        .complete(&stage2, media)
        .map_err(|e| BackendError::Stage { stage: "cot stage 2", source: Box::new(e) })?;
    Ok(CotOutcome { reasoning, response })
}

/// Fill the minimal fixed baseline prompt.
pub fn baseline_prompt(question: &str) -> String {
    BASELINE_PROMPT.replace("{question}", question)
}
