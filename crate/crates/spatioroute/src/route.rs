//! Rule-based routing: question type → fixed template, no model call.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::templates::{self, TemplateId};
use crate::typology::{classify, QuestionType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouterKind {
    Baseline,
    Cot,
    Rule,
    Llm,
}

/// A dispatch-ready prompt with routing provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutedPrompt {
    pub prompt_text: String,
    pub router: RouterKind,
    pub template_id: Option<TemplateId>,
    pub question_type: QuestionType,
    pub used_situation: bool,
    /// Set when the LLM route fell back to the rule route.
    pub fell_back: bool,
}

/// The fixed question-type → template assignment.
pub fn template_for_type(question_type: QuestionType) -> TemplateId {
    match question_type {
        QuestionType::What => TemplateId::DetailsScene,
        QuestionType::Is => TemplateId::StepByStep,
        QuestionType::How => TemplateId::DetailsScene,
        QuestionType::Can => TemplateId::SceneUnderstanding,
        QuestionType::Which => TemplateId::DetailsScene,
        QuestionType::Others => TemplateId::InstructionFocused,
    }
}

/// Route a question through the rule table and instantiate the template.
///
/// When an `Is` question arrives without a situation, the step-by-step
/// template is instantiated without the prefix; see [`route_rule_strict`]
/// for the erroring variant.
pub fn route_rule(question: &str, situation: Option<&str>) -> Result<RoutedPrompt> {
    route_rule_opts(question, situation, false)
}

/// Strict variant: a situation-requiring template without a situation errors.
pub fn route_rule_strict(question: &str, situation: Option<&str>) -> Result<RoutedPrompt> {
    route_rule_opts(question, situation, true)
}

fn route_rule_opts(question: &str, situation: Option<&str>, strict: bool) -> Result<RoutedPrompt> {
    let question_type = classify(question)?;
    let template = templates::template(template_for_type(question_type));
    let used_situation = template.requires_situation && situation.is_some();
    let prompt_text = match templates::instantiate(template, question, situation) {
        Ok(text) => text,
        Err(Error::MissingSituation(_)) if !strict => {
            // Degrade gracefully: fill the body without the prefix.
            let relaxed = crate::templates::PromptTemplate {
                requires_situation: false,
                ..*template
            };
            templates::instantiate(&relaxed, question, None)?
        }
        Err(e) => return Err(e),
    };
    Ok(RoutedPrompt {
        prompt_text,
        router: RouterKind::Rule,
        template_id: Some(template.id),
        question_type,
        used_situation,
        fell_back: false,
    })
}
