//! LLM-driven routing: synthesize a task-specific prompt from
//! `(question, situation)` with a text-only router conditioned on six
//! few-shot demonstrations, one per question category. The router never
//! sees video; on validation failure or backend error it falls back to the
//! rule route.

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, ChatRequest, Message, RequestSettings, Role};
use crate::error::{Error, Result};
use crate::route::{route_rule, RoutedPrompt, RouterKind};
use crate::typology::{classify, QuestionType};

pub const ROUTER_META_INSTRUCTION: &str = include_str!("../templates/router_meta_instruction.txt");

pub const DEFAULT_DEMOS_JSON: &str = include_str!("../data/default_demos.json");

/// Generated prompts outside these bounds are rejected and fall back.
pub const MIN_GENERATED_LEN: usize = 20;
pub const MAX_GENERATED_LEN: usize = 2000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FewShotDemo {
    pub category: QuestionType,
    pub question: String,
    pub situation: String,
    pub reference_prompt: String,
}

/// Exactly six demos, one per question category.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<FewShotDemo>", into = "Vec<FewShotDemo>")]
pub struct DemoSet {
    demos: Vec<FewShotDemo>,
}

impl TryFrom<Vec<FewShotDemo>> for DemoSet {
    type Error = Error;
    fn try_from(demos: Vec<FewShotDemo>) -> Result<Self> {
        DemoSet::new(demos)
    }
}

impl From<DemoSet> for Vec<FewShotDemo> {
    fn from(set: DemoSet) -> Self {
        set.demos
    }
}

impl DemoSet {
    pub fn new(demos: Vec<FewShotDemo>) -> Result<Self> {
        if demos.len() != 6 {
            return Err(Error::DemoSet(format!(
                "expected exactly 6 demos, got {}",
                demos.len()
            )));
        }
        for qt in QuestionType::ALL {
            let count = demos.iter().filter(|d| d.category == qt).count();
            if count != 1 {
                return Err(Error::DemoSet(format!(
                    "expected exactly one {qt} demo, got {count}"
                )));
            }
        }
        for demo in &demos {
            if demo.question.trim().is_empty()
                || demo.situation.trim().is_empty()
                || demo.reference_prompt.trim().is_empty()
            {
                return Err(Error::DemoSet(format!(
                    "demo for {} has an empty field",
                    demo.category
                )));
            }
        }
        Ok(DemoSet { demos })
    }

    /// The shipped default demos, each reference prompt derived from the
    /// rule router's template for that category.
    pub fn default_set() -> Self {
        serde_json::from_str(DEFAULT_DEMOS_JSON).expect("bundled demo set is valid")
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&raw).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn demos(&self) -> &[FewShotDemo] {
        &self.demos
    }
}

/// Build the text-only router request: meta-instruction, six demo blocks,
/// then the target pair. Contains zero media parts by construction.
pub fn build_router_request(
    question: &str,
    situation: &str,
    demos: &DemoSet,
    settings: &RequestSettings,
) -> ChatRequest {
    let mut body = String::new();
    for demo in demos.demos() {
        body.push_str(&format!(
            "Question: {}\nSituation: {}\nPrompt: {}\n\n",
            demo.question, demo.situation, demo.reference_prompt
        ));
    }
    body.push_str(&format!(
        "Question: {question}\nSituation: {situation}\nPrompt:"
    ));
    ChatRequest {
        messages: vec![
            Message::text(Role::System, ROUTER_META_INSTRUCTION),
            Message::text(Role::User, body),
        ],
        temperature: settings.temperature,
        max_output: settings.max_output,
        model_id: settings.model_id.clone(),
    }
}

fn validate_generated(prompt: &str, question: &str) -> bool {
    let len = prompt.chars().count();
    (MIN_GENERATED_LEN..=MAX_GENERATED_LEN).contains(&len)
        && prompt.to_lowercase().contains(&question.to_lowercase())
}

/// Route via the text-only LLM. Single backend call; falls back to
/// [`route_rule`] when the call fails or the generated prompt is invalid,
/// recording the fallback in provenance.
pub fn route_llm(
    question: &str,
    situation: &str,
    demos: &DemoSet,
    router_backend: &dyn Backend,
    settings: &RequestSettings,
) -> Result<RoutedPrompt> {
    let question_type = classify(question)?;
    let request = build_router_request(question, situation, demos, settings);
    debug_assert_eq!(request.media_part_count(), 0);
    let generated = router_backend
        .complete(&request, None)
        .map(|r| r.text.trim().to_string());
    match generated {
        Ok(text) if validate_generated(&text, question) => Ok(RoutedPrompt {
            prompt_text: text,
            router: RouterKind::Llm,
            template_id: None,
            question_type,
            used_situation: true,
            fell_back: false,
        }),
        _ => {
            let mut routed = route_rule(question, Some(situation))?;
            routed.fell_back = true;
            Ok(routed)
        }
    }
}
