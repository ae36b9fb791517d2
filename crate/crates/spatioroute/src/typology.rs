//! Six-way question typology by leading interrogative token.
//!
//! Classification is pure string matching: the first whitespace-delimited
//! token, lower-cased and stripped of surrounding ASCII punctuation, selects
//! the category. Anything that is not one of the five interrogatives falls
//! into `Others`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Punctuation stripped from the leading token before matching.
const TOKEN_PUNCTUATION: &[char] = &['.', ',', '!', '?', ':', ';', '"', '\''];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QuestionType {
    What,
    Is,
    How,
    Can,
    Which,
    Others,
}

impl QuestionType {
    pub const ALL: [QuestionType; 6] = [
        QuestionType::What,
        QuestionType::Is,
        QuestionType::How,
        QuestionType::Can,
        QuestionType::Which,
        QuestionType::Others,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            QuestionType::What => "What",
            QuestionType::Is => "Is",
            QuestionType::How => "How",
            QuestionType::Can => "Can",
            QuestionType::Which => "Which",
            QuestionType::Others => "Others",
        }
    }
}

impl std::fmt::Display for QuestionType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Classify a question by its leading interrogative token.
///
/// Deterministic, no model inference. Errors only on an empty or
/// whitespace-only question.
pub fn classify(question: &str) -> Result<QuestionType> {
    let token = question
        .split_whitespace()
        .next()
        .ok_or(Error::EmptyQuestion)?;
    let token = token.trim_matches(TOKEN_PUNCTUATION).to_lowercase();
    Ok(match token.as_str() {
        "what" => QuestionType::What,
        "is" => QuestionType::Is,
        "how" => QuestionType::How,
        "can" => QuestionType::Can,
        "which" => QuestionType::Which,
        _ => QuestionType::Others,
    })
}
