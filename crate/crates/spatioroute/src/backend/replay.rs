//! Replay backend: a read-only fixture store keyed by the canonical request
//! hash (see [`super::replay_key`]). Missing keys error; no retries.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{replay_key, Backend, BackendError, ChatRequest, ChatResponse, MediaRef};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub key: String,
    pub response_text: String,
}

pub struct ReplayBackend {
    records: HashMap<String, String>,
}

/// Parse a fixture file body: one record or an array of records.
pub fn parse_records(raw: &str) -> Result<Vec<ReplayRecord>, serde_json::Error> {
    match serde_json::from_str::<Vec<ReplayRecord>>(raw) {
        Ok(list) => Ok(list),
        Err(_) => Ok(vec![serde_json::from_str::<ReplayRecord>(raw)?]),
    }
}

impl ReplayBackend {
    /// Load every `*.json` file in `dir`. Each file holds one record or an
    /// array of records `{key, response_text}`.
    pub fn load_dir(dir: &Path) -> Result<Self, BackendError> {
        let mut records = HashMap::new();
        let entries = std::fs::read_dir(dir).map_err(|e| BackendError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect();
        paths.sort();
        for path in paths {
            let raw = std::fs::read_to_string(&path).map_err(|e| BackendError::Io {
                path: path.clone(),
                source: e,
            })?;
            let parsed = parse_records(&raw).map_err(|e| {
                BackendError::InvalidResponse(format!("{}: {e}", path.display()))
            })?;
            for record in parsed {
                records.insert(record.key, record.response_text);
            }
        }
        Ok(ReplayBackend { records })
    }

    pub fn from_records(records: impl IntoIterator<Item = ReplayRecord>) -> Self {
        ReplayBackend {
            records: records
                .into_iter()
                .map(|r| (r.key, r.response_text))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl Backend for ReplayBackend {
    fn complete(
        &self,
        request: &ChatRequest,
        media: Option<&MediaRef>,
    ) -> Result<ChatResponse, BackendError> {
        let key = replay_key(request, media);
        match self.records.get(&key) {
            Some(text) => Ok(ChatResponse {
                text: text.clone(),
                usage: None,
                latency_ms: 0,
            }),
            None => Err(BackendError::ReplayMiss { key }),
        }
    }
}
