//! Scripted backend for tests: a closure maps requests to response text,
//! with a call log for structural assertions (call counts, media parts).

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use super::{Backend, BackendError, ChatRequest, ChatResponse, MediaRef};

type Script = dyn Fn(&ChatRequest, Option<&MediaRef>) -> Result<String, BackendError> + Send + Sync;

#[derive(Debug, Clone)]
pub struct LoggedCall {
    pub text: String,
    pub media_parts: usize,
    pub model_id: String,
}

pub struct MockBackend {
    script: Box<Script>,
    calls: AtomicUsize,
    log: Mutex<Vec<LoggedCall>>,
}

impl MockBackend {
    pub fn new<F>(script: F) -> Self
    where
        F: Fn(&ChatRequest, Option<&MediaRef>) -> Result<String, BackendError> + Send + Sync + 'static,
    {
        MockBackend {
            script: Box::new(script),
            calls: AtomicUsize::new(0),
            log: Mutex::new(Vec::new()),
        }
    }

    /// A mock that always replies with the same text.
    pub fn fixed(text: impl Into<String>) -> Self {
        let text = text.into();
        MockBackend::new(move |_, _| Ok(text.clone()))
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn log(&self) -> Vec<LoggedCall> {
        self.log.lock().unwrap().clone()
    }
}

impl Backend for MockBackend {
    fn complete(
        &self,
        request: &ChatRequest,
        media: Option<&MediaRef>,
    ) -> Result<ChatResponse, BackendError> {
        let start = Instant::now();
        self.calls.fetch_add(1, Ordering::SeqCst);
        let media_parts =
            request.media_part_count() + media.map_or(0, |m| m.frame_paths.len());
        self.log.lock().unwrap().push(LoggedCall {
            text: request.text_content(),
            media_parts,
            model_id: request.model_id.clone(),
        });
        let text = (self.script)(request, media)?;
        Ok(ChatResponse {
            text,
            usage: None,
            latency_ms: start.elapsed().as_millis() as u64,
        })
    }
}

/// Wraps any backend, logging every request that passes through. Used to
/// assert wire-level properties (e.g. router requests carry no media).
pub struct LoggingBackend<B> {
    inner: B,
    log: Mutex<Vec<LoggedCall>>,
}

impl<B: Backend> LoggingBackend<B> {
    pub fn new(inner: B) -> Self {
        LoggingBackend {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn log(&self) -> Vec<LoggedCall> {
        self.log.lock().unwrap().clone()
    }
}

impl<B: Backend> Backend for LoggingBackend<B> {
    fn complete(
        &self,
        request: &ChatRequest,
        media: Option<&MediaRef>,
    ) -> Result<ChatResponse, BackendError> {
        let media_parts =
            request.media_part_count() + media.map_or(0, |m| m.frame_paths.len());
        self.log.lock().unwrap().push(LoggedCall {
            text: request.text_content(),
            media_parts,
            model_id: request.model_id.clone(),
        });
        self.inner.complete(request, media)
    }
}
