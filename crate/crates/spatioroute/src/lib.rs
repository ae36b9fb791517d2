//! SpatioRoute: query-conditioned prompt routing and a zero-shot evaluation
//! harness for situated spatial video QA on SQA3D-style datasets.
//!
//! The crate is organized around the inference path:
//!
//! * [`typology`] — six-way question classification by leading interrogative token.
//! * [`templates`] — the four canonical prompt templates plus the situational
//!   context prefix, loaded from golden files under `templates/`.
//! * [`route`] — the deterministic rule router (question type → template).
//! * [`route_llm`] — the LLM-driven router: few-shot prompt synthesis from
//!   `(question, situation)` with no video input.
//! * [`backend`] — chat wire contract, uniform frame sampling, live HTTP,
//!   replay and scripted-mock backends, two-stage CoT dispatch.
//! * [`dataset`] — SQA3D ingestion into canonical JSONL and split statistics.
//! * [`eval`] — answer extraction, exact match, per-category scoring and deltas.
//! * [`runner`] — condition × backend × dataset evaluation driver.
//! * [`report`] — human table rendering for reports and deltas.
//! * [`config`] — run configuration and backend construction for the CLI.

pub mod backend;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod report;
pub mod route;
pub mod route_llm;
pub mod runner;
pub mod templates;
pub mod typology;

pub use error::{Error, Result};
pub use typology::{classify, QuestionType};
