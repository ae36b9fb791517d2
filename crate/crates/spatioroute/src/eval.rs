//! Answer extraction, exact-match scoring, per-category reports and deltas.
//!
//! The extraction pipeline is versioned (`NORMALIZER_VERSION`) and logged in
//! every report. Pipeline for one pass:
//! 1. keep text after the last case-insensitive "answer is" / "answer:";
//! 2. keep the first line, then the first sentence of it;
//! 3. lower-case, strip ASCII punctuation, collapse whitespace;
//! 4. drop leading articles (a, an, the);
//! 5. canonicalize a leading yes/no synonym to "yes"/"no", otherwise map
//!    number words zero–twenty to digits token-wise.
//! The pass repeats until a fixed point, which makes the normalizer
//! idempotent even when punctuation removal uncovers a new marker.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::SqaInstance;
use crate::error::{Error, Result};
use crate::route::{RoutedPrompt, RouterKind};
use crate::templates::TemplateId;
use crate::typology::QuestionType;

pub const NORMALIZER_VERSION: &str = "v1";

const MARKERS: [&str; 2] = ["answer is", "answer:"];
const YES_SYNONYMS: [&str; 4] = ["yes", "yeah", "correct", "true"];
const NO_SYNONYMS: [&str; 4] = ["no", "nope", "false", "incorrect"];
const NUMBER_WORDS: [&str; 21] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
    "nineteen", "twenty",
];

fn one_pass(raw: &str) -> String {
    // 1. Text after the last answer marker. The search and slice both run on
    //    the lowercased text (case is destroyed in step 3 regardless), which
    //    keeps byte offsets consistent for non-ASCII input.
    let lower = raw.to_lowercase();
    let mut cut = None;
    for marker in MARKERS {
        if let Some(pos) = lower.rfind(marker) {
            let end = pos + marker.len();
            cut = Some(cut.map_or(end, |c: usize| c.max(end)));
        }
    }
    let rest = match cut {
        Some(end) => &lower[end..],
        None => raw,
    };
    // 2. First line, then first sentence.
    let line = rest.split('\n').next().unwrap_or("");
    let sentence = line
        .split_inclusive(['.', '!', '?'])
        .next()
        .unwrap_or("")
        .trim_end_matches(['.', '!', '?']);
    // 3. Lowercase, strip ASCII punctuation, collapse whitespace.
    let cleaned: String = sentence
        .to_lowercase()
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect();
    let mut tokens: Vec<&str> = cleaned.split_whitespace().collect();
    // 4. Drop leading articles.
    while matches!(tokens.first(), Some(&"a") | Some(&"an") | Some(&"the")) {
        tokens.remove(0);
    }
    // 5. Yes/no collapse, else number-word mapping.
    if let Some(first) = tokens.first() {
        if YES_SYNONYMS.contains(first) {
            return "yes".to_string();
        }
        if NO_SYNONYMS.contains(first) {
            return "no".to_string();
        }
    }
    tokens
        .iter()
        .map(|t| match NUMBER_WORDS.iter().position(|w| w == t) {
            Some(n) => n.to_string(),
            None => (*t).to_string(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Normalize raw model output to comparable answer tokens. Idempotent.
pub fn extract_answer(raw: &str) -> String {
    let mut current = raw.to_string();
    // The pass shrinks or stabilizes its input, so this terminates quickly;
    // the bound is a backstop.
    for _ in 0..16 {
        let next = one_pass(&current);
        if next == current {
            return next;
        }
        current = next;
    }
    current
}

/// Exact match against any gold answer; gold passes the same normalizer.
pub fn exact_match(extracted: &str, gold_answers: &[String]) -> bool {
    gold_answers.iter().any(|g| extract_answer(g) == extracted)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Condition {
    Baseline,
    Cot,
    RouteRule,
    RouteLlm,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::Baseline,
        Condition::Cot,
        Condition::RouteRule,
        Condition::RouteLlm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Baseline => "baseline",
            Condition::Cot => "cot",
            Condition::RouteRule => "route_rule",
            Condition::RouteLlm => "route_llm",
        }
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Prompt provenance carried in every record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptProvenance {
    pub router: RouterKind,
    pub template_id: Option<TemplateId>,
    pub question_type: QuestionType,
    pub used_situation: bool,
    pub fell_back: bool,
}

impl From<&RoutedPrompt> for PromptProvenance {
    fn from(routed: &RoutedPrompt) -> Self {
        PromptProvenance {
            router: routed.router,
            template_id: routed.template_id,
            question_type: routed.question_type,
            used_situation: routed.used_situation,
            fell_back: routed.fell_back,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub instance_id: String,
    pub condition: Condition,
    pub provenance: Option<PromptProvenance>,
    pub raw_output: String,
    pub extracted: String,
    pub correct: bool,
    /// Per-instance failure marker; the run never aborts on one instance.
    pub error: Option<String>,
}

/// Correct/total tally. `correct` is fractional only for synthetic reports
/// built from published accuracies; record tallies are whole numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub correct: f64,
    pub total: u64,
}

impl CategoryScore {
    pub const ZERO: CategoryScore = CategoryScore {
        correct: 0.0,
        total: 0,
    };

    /// Unrounded accuracy in percent; `None` when the category is empty.
    pub fn accuracy(&self) -> Option<f64> {
        match self.total {
            0 => None,
            n => Some(100.0 * self.correct / n as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_id: String,
    pub condition: Condition,
    pub normalizer_version: String,
    pub per_category: BTreeMap<QuestionType, CategoryScore>,
    pub overall: CategoryScore,
}

impl EvalReport {
    /// Build a report from integer count pairs `(correct, total)`.
    pub fn from_counts(
        model_id: impl Into<String>,
        condition: Condition,
        counts: BTreeMap<QuestionType, (u64, u64)>,
    ) -> Self {
        let per_category: BTreeMap<QuestionType, CategoryScore> = QuestionType::ALL
            .iter()
            .map(|qt| {
                let (correct, total) = counts.get(qt).copied().unwrap_or((0, 0));
                (
                    *qt,
                    CategoryScore {
                        correct: correct as f64,
                        total,
                    },
                )
            })
            .collect();
        let overall = CategoryScore {
            correct: per_category.values().map(|s| s.correct).sum(),
            total: per_category.values().map(|s| s.total).sum(),
        };
        EvalReport {
            model_id: model_id.into(),
            condition,
            normalizer_version: NORMALIZER_VERSION.to_string(),
            per_category,
            overall,
        }
    }

    /// Build a synthetic report from per-category accuracies (percent) and
    /// question counts, e.g. to replay published table rows.
    pub fn from_accuracies(
        model_id: impl Into<String>,
        condition: Condition,
        cells: &[(QuestionType, f64, u64)],
    ) -> Self {
        let per_category: BTreeMap<QuestionType, CategoryScore> = cells
            .iter()
            .map(|(qt, accuracy, total)| {
                (
                    *qt,
                    CategoryScore {
                        correct: accuracy / 100.0 * *total as f64,
                        total: *total,
                    },
                )
            })
            .collect();
        let overall = CategoryScore {
            correct: per_category.values().map(|s| s.correct).sum(),
            total: per_category.values().map(|s| s.total).sum(),
        };
        EvalReport {
            model_id: model_id.into(),
            condition,
            normalizer_version: NORMALIZER_VERSION.to_string(),
            per_category,
            overall,
        }
    }

    /// Count-weighted mean of per-category accuracies; coincides with the
    /// overall accuracy by construction.
    pub fn weighted_overall(&self) -> Option<f64> {
        self.overall.accuracy()
    }
}

/// Count-weighted mean of `(accuracy_percent, count)` cells.
pub fn weighted_mean(cells: &[(f64, u64)]) -> f64 {
    let total: u64 = cells.iter().map(|(_, c)| c).sum();
    cells.iter().map(|(a, c)| a * *c as f64).sum::<f64>() / total as f64
}

/// Tally records into a per-category and overall report.
pub fn score(
    records: &[EvalRecord],
    instances: &[SqaInstance],
    model_id: &str,
    condition: Condition,
) -> Result<EvalReport> {
    let by_id: BTreeMap<&str, &SqaInstance> =
        instances.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut counts: BTreeMap<QuestionType, (u64, u64)> =
        QuestionType::ALL.iter().map(|qt| (*qt, (0, 0))).collect();
    for record in records {
        let instance = by_id
            .get(record.instance_id.as_str())
            .ok_or_else(|| Error::UnknownInstance(record.instance_id.clone()))?;
        let entry = counts.get_mut(&instance.category).unwrap();
        entry.1 += 1;
        if record.correct {
            entry.0 += 1;
        }
    }
    Ok(EvalReport::from_counts(model_id, condition, counts))
}

/// Signed per-category and overall accuracy differences `a − b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub model_a: String,
    pub model_b: String,
    pub condition_a: Condition,
    pub condition_b: Condition,
    /// `None` where either side has an empty category.
    pub per_category: BTreeMap<QuestionType, Option<f64>>,
    pub overall: Option<f64>,
}

/// Per-category and overall accuracy deltas. Errors when the reports cover
/// different question counts.
pub fn delta(a: &EvalReport, b: &EvalReport) -> Result<DeltaReport> {
    for qt in QuestionType::ALL {
        let ta = a.per_category.get(&qt).map_or(0, |s| s.total);
        let tb = b.per_category.get(&qt).map_or(0, |s| s.total);
        if ta != tb {
            return Err(Error::DatasetMismatch(format!(
                "category {qt}: totals {ta} vs {tb}"
            )));
        }
    }
    let per_category = QuestionType::ALL
        .iter()
        .map(|qt| {
            let accuracy_a = a.per_category.get(qt).and_then(|s| s.accuracy());
            let accuracy_b = b.per_category.get(qt).and_then(|s| s.accuracy());
            let cell = match (accuracy_a, accuracy_b) {
                (Some(x), Some(y)) => Some(x - y),
                _ => None,
            };
            (*qt, cell)
        })
        .collect();
    let overall = match (a.overall.accuracy(), b.overall.accuracy()) {
        (Some(x), Some(y)) => Some(x - y),
        _ => None,
    };
    Ok(DeltaReport {
        model_a: a.model_id.clone(),
        model_b: b.model_id.clone(),
        condition_a: a.condition,
        condition_b: b.condition,
        per_category,
        overall,
    })
}
