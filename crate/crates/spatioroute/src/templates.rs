//! The canonical prompt template library.
//!
//! The four template bodies and the situational-context prefix are golden
//! files under `templates/`; they are compiled in verbatim so the files stay
//! the single source of truth. Bodies carry a `{question}` placeholder
//! exactly once; the situation is attached as a prefix, never inline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DETAILS_SCENE_BODY: &str = include_str!("../templates/details_scene.txt");
pub const STEP_BY_STEP_BODY: &str = include_str!("../templates/step_by_step.txt");
pub const SCENE_UNDERSTANDING_BODY: &str = include_str!("../templates/scene_understanding.txt");
pub const INSTRUCTION_FOCUSED_BODY: &str = include_str!("../templates/instruction_focused.txt");
pub const SITUATION_PREFIX_BODY: &str = include_str!("../templates/situation_prefix.txt");

pub const QUESTION_PLACEHOLDER: &str = "{question}";
pub const SITUATION_PLACEHOLDER: &str = "{situation}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    DetailsScene,
    StepByStep,
    SceneUnderstanding,
    InstructionFocused,
}

impl TemplateId {
    pub const ALL: [TemplateId; 4] = [
        TemplateId::DetailsScene,
        TemplateId::StepByStep,
        TemplateId::SceneUnderstanding,
        TemplateId::InstructionFocused,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TemplateId::DetailsScene => "details_scene",
            TemplateId::StepByStep => "step_by_step",
            TemplateId::SceneUnderstanding => "scene_understanding",
            TemplateId::InstructionFocused => "instruction_focused",
        }
    }

    pub fn parse(id: &str) -> Result<TemplateId> {
        match id {
            "details_scene" => Ok(TemplateId::DetailsScene),
            "step_by_step" => Ok(TemplateId::StepByStep),
            "scene_understanding" => Ok(TemplateId::SceneUnderstanding),
            "instruction_focused" => Ok(TemplateId::InstructionFocused),
            other => Err(Error::UnknownTemplate(other.to_string())),
        }
    }
}

impl std::fmt::Display for TemplateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub body: &'static str,
    /// Only `step_by_step` attaches the situational prefix by default.
    pub requires_situation: bool,
}

pub const LIBRARY: [PromptTemplate; 4] = [
    PromptTemplate {
        id: TemplateId::DetailsScene,
        body: DETAILS_SCENE_BODY,
        requires_situation: false,
    },
    PromptTemplate {
        id: TemplateId::StepByStep,
        body: STEP_BY_STEP_BODY,
        requires_situation: true,
    },
    PromptTemplate {
        id: TemplateId::SceneUnderstanding,
        body: SCENE_UNDERSTANDING_BODY,
        requires_situation: false,
    },
    PromptTemplate {
        id: TemplateId::InstructionFocused,
        body: INSTRUCTION_FOCUSED_BODY,
        requires_situation: false,
    },
];

pub fn template(id: TemplateId) -> &'static PromptTemplate {
    &LIBRARY[TemplateId::ALL.iter().position(|t| *t == id).unwrap()]
}

/// Look up a library entry by its string id.
pub fn template_for_id(id: &str) -> Result<&'static PromptTemplate> {
    Ok(template(TemplateId::parse(id)?))
}

/// Fill the situational-context prefix with the situation verbatim.
pub fn fill_situation_prefix(situation: &str) -> String {
    SITUATION_PREFIX_BODY.replace(SITUATION_PLACEHOLDER, situation)
}

/// Instantiate a template with the question and, when the template requires
/// one, the situational prefix.
pub fn instantiate(
    template: &PromptTemplate,
    question: &str,
    situation: Option<&str>,
) -> Result<String> {
    instantiate_opts(template, question, situation, false)
}

/// Like [`instantiate`], but `force_situation` attaches the prefix to
/// templates that do not require one (defaulting off everywhere else).
pub fn instantiate_opts(
    template: &PromptTemplate,
    question: &str,
    situation: Option<&str>,
    force_situation: bool,
) -> Result<String> {
    if question.trim().is_empty() {
        return Err(Error::EmptyQuestion);
    }
    let found = template.body.matches(QUESTION_PLACEHOLDER).count();
    if found != 1 {
        return Err(Error::PlaceholderCount {
            template_id: template.id.as_str().to_string(),
            placeholder: QUESTION_PLACEHOLDER,
            found,
        });
    }
    if template.body.contains(SITUATION_PLACEHOLDER) {
        return Err(Error::PlaceholderCount {
            template_id: template.id.as_str().to_string(),
            placeholder: SITUATION_PLACEHOLDER,
            found: template.body.matches(SITUATION_PLACEHOLDER).count(),
        });
    }
    if template.requires_situation && situation.is_none() {
        return Err(Error::MissingSituation(template.id.as_str().to_string()));
    }
    let body = template.body.replace(QUESTION_PLACEHOLDER, question);
    let attach = situation.filter(|_| template.requires_situation || force_situation);
    Ok(match attach {
        Some(s) => format!("{}\n{}", fill_situation_prefix(s), body),
        None => body,
    })
}
