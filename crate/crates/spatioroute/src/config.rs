//! Run configuration: a JSON config file with full CLI-flag override.
//! Every eval run writes its resolved config beside its outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backend::live::LiveBackend;
use crate::backend::replay::ReplayBackend;
use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::eval::Condition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Live,
    Replay,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendSpec {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    pub model_id: String,
    /// Environment variable holding the API key, never the key itself.
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// Fixture directory for replay backends.
    #[serde(default)]
    pub replay_dir: Option<PathBuf>,
}

impl BackendSpec {
    pub fn build(&self, base: &Path) -> Result<Box<dyn Backend>> {
        match self.kind {
            BackendKind::Live => {
                let endpoint = self
                    .endpoint
                    .clone()
                    .ok_or_else(|| Error::Config("live backend requires an endpoint".into()))?;
                let api_key = match &self.api_key_env {
                    Some(var) => Some(std::env::var(var).map_err(|_| {
                        Error::Config(format!("api key env var {var} is not set"))
                    })?),
                    None => None,
                };
                Ok(Box::new(LiveBackend::new(endpoint, api_key)?))
            }
            BackendKind::Replay => {
                let dir = self
                    .replay_dir
                    .clone()
                    .ok_or_else(|| Error::Config("replay backend requires replay_dir".into()))?;
                let dir = match dir.is_relative() {
                    true => base.join(dir),
                    false => dir,
                };
                Ok(Box::new(ReplayBackend::load_dir(&dir)?))
            }
        }
    }
}

fn default_frames() -> usize {
    crate::backend::DEFAULT_FRAME_TARGET
}
fn default_temperature() -> f64 {
    crate::backend::DEFAULT_TEMPERATURE
}
fn default_max_output() -> u32 {
    crate::backend::DEFAULT_MAX_OUTPUT
}
fn default_concurrency() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub manifest: PathBuf,
    pub condition: Condition,
    pub answer_backend: BackendSpec,
    #[serde(default)]
    pub router_backend: Option<BackendSpec>,
    /// Demo-set JSON; the bundled defaults apply when absent.
    #[serde(default)]
    pub demos: Option<PathBuf>,
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_output")]
    pub max_output: u32,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: RunConfig = serde_json::from_str(&raw).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        // Paths resolve against the config file location.
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        for p in [&mut config.dataset, &mut config.manifest, &mut config.output_dir] {
            if p.is_relative() {
                *p = base.join(&p);
            }
        }
        if let Some(demos) = &mut config.demos {
            if demos.is_relative() {
                *demos = base.join(&demos);
            }
        }
        for spec in [Some(&mut config.answer_backend), config.router_backend.as_mut()]
            .into_iter()
            .flatten()
        {
            if let Some(dir) = &mut spec.replay_dir {
                if dir.is_relative() {
                    *dir = base.join(&dir);
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(Error::Config(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.frames == 0 {
            return Err(Error::Config("frames must be at least 1".into()));
        }
        if self.concurrency == 0 {
            return Err(Error::Config("concurrency must be at least 1".into()));
        }
        if self.condition == Condition::RouteLlm && self.router_backend.is_none() {
            return Err(Error::Config(
                "condition route_llm requires router_backend".into(),
            ));
        }
        Ok(())
    }
}
