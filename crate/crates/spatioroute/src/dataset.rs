//! SQA3D dataset ingestion.
//!
//! Canonical format is UTF-8 JSON Lines with fields
//! `{id, scene_id, situation, question, answers}`. The official
//! distribution (a questions file and an annotations file joined on
//! `question_id`) converts into that stream via [`convert_official`].

use std::collections::{BTreeMap, HashSet};
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::typology::{classify, QuestionType};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqaInstance {
    pub id: String,
    pub scene_id: String,
    pub situation: String,
    pub question: String,
    pub gold_answers: Vec<String>,
    /// Derived from the question's leading token; cached at load time.
    pub category: QuestionType,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CanonicalRecord {
    id: String,
    scene_id: String,
    situation: String,
    question: String,
    answers: Vec<String>,
}

impl SqaInstance {
    fn from_record(record: CanonicalRecord, path: &Path, line: usize) -> Result<Self> {
        let schema_err = |message: String| Error::Schema {
            path: path.to_path_buf(),
            line,
            message,
        };
        if record.question.trim().is_empty() {
            return Err(schema_err("question is empty".into()));
        }
        if record.situation.trim().is_empty() {
            return Err(schema_err("situation is empty".into()));
        }
        if record.answers.is_empty() {
            return Err(schema_err("answers list is empty".into()));
        }
        let category = classify(&record.question)
            .map_err(|e| schema_err(e.to_string()))?;
        Ok(SqaInstance {
            id: record.id,
            scene_id: record.scene_id,
            situation: record.situation,
            question: record.question,
            gold_answers: record.answers,
            category,
        })
    }

    fn to_record(&self) -> CanonicalRecord {
        CanonicalRecord {
            id: self.id.clone(),
            scene_id: self.scene_id.clone(),
            situation: self.situation.clone(),
            question: self.question.clone(),
            answers: self.gold_answers.clone(),
        }
    }
}

/// Load canonical JSONL, failing loudly with line numbers.
pub fn load(path: &Path) -> Result<Vec<SqaInstance>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut raw = String::new();
    reader
        .read_to_string(&mut raw)
        .map_err(|e| Error::io(path, e))?;
    parse_canonical(&raw, path)
}

/// Parse canonical JSONL text; `origin` only labels error messages.
pub fn parse_canonical(raw: &str, origin: &Path) -> Result<Vec<SqaInstance>> {
    let mut instances = Vec::new();
    let mut seen = HashSet::new();
    for (index, line) in raw.lines().enumerate() {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: CanonicalRecord = serde_json::from_str(line).map_err(|e| Error::Schema {
            path: origin.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        let instance = SqaInstance::from_record(record, origin, line_no)?;
        if !seen.insert(instance.id.clone()) {
            return Err(Error::DuplicateId {
                id: instance.id,
                path: origin.to_path_buf(),
                line: line_no,
            });
        }
        instances.push(instance);
    }
    Ok(instances)
}

/// Write instances as canonical JSONL.
pub fn write_canonical(instances: &[SqaInstance], path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for instance in instances {
        let line = serde_json::to_string(&instance.to_record()).expect("record serializes");
        writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

// Official SQA3D distribution shapes (VQA-style).

#[derive(Debug, Deserialize)]
struct OfficialQuestions {
    questions: Vec<OfficialQuestion>,
}

#[derive(Debug, Deserialize)]
struct OfficialQuestion {
    question_id: serde_json::Value,
    scene_id: String,
    situation: String,
    question: String,
}

#[derive(Debug, Deserialize)]
struct OfficialAnnotations {
    annotations: Vec<OfficialAnnotation>,
}

#[derive(Debug, Deserialize)]
struct OfficialAnnotation {
    question_id: serde_json::Value,
    answers: Vec<OfficialAnswer>,
}

#[derive(Debug, Deserialize)]
struct OfficialAnswer {
    answer: String,
}

fn id_key(value: &serde_json::Value) -> String {
    match value {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Result of converting the official file pair.
pub struct ConvertOutcome {
    pub instances: Vec<SqaInstance>,
    /// Questions or annotations whose ids did not join.
    pub skipped: usize,
}

/// Join the official questions/annotations files into canonical instances.
/// Unjoinable ids are skipped and counted; an empty join is an error.
pub fn convert_official(questions_path: &Path, annotations_path: &Path) -> Result<ConvertOutcome> {
    let questions_raw =
        std::fs::read_to_string(questions_path).map_err(|e| Error::io(questions_path, e))?;
    let annotations_raw =
        std::fs::read_to_string(annotations_path).map_err(|e| Error::io(annotations_path, e))?;
    convert_official_str(&questions_raw, &annotations_raw, questions_path, annotations_path)
}

/// [`convert_official`] on in-memory JSON; paths only label error messages.
pub fn convert_official_str(
    questions_raw: &str,
    annotations_raw: &str,
    questions_path: &Path,
    annotations_path: &Path,
) -> Result<ConvertOutcome> {
    let parse_err = |path: &Path, e: serde_json::Error| Error::Parse {
        path: path.to_path_buf(),
        message: format!("line {} column {}: {e}", e.line(), e.column()),
    };
    let questions: OfficialQuestions =
        serde_json::from_str(questions_raw).map_err(|e| parse_err(questions_path, e))?;
    let annotations: OfficialAnnotations =
        serde_json::from_str(annotations_raw).map_err(|e| parse_err(annotations_path, e))?;

    let mut answers: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for ann in annotations.annotations {
        answers.insert(
            id_key(&ann.question_id),
            ann.answers.into_iter().map(|a| a.answer).collect(),
        );
    }
    let total_annotations = answers.len();

    let mut instances = Vec::new();
    let mut skipped = 0usize;
    let mut joined_ids = HashSet::new();
    for q in questions.questions {
        let id = id_key(&q.question_id);
        match answers.get(&id) {
            Some(gold) if !gold.is_empty() => {
                joined_ids.insert(id.clone());
                let category = classify(&q.question).map_err(|e| Error::Schema {
                    path: questions_path.to_path_buf(),
                    line: 0,
                    message: format!("question {id}: {e}"),
                })?;
                instances.push(SqaInstance {
                    id,
                    scene_id: q.scene_id,
                    situation: q.situation,
                    question: q.question,
                    gold_answers: gold.clone(),
                    category,
                });
            }
            _ => skipped += 1,
        }
    }
    // Orphan annotations count as skipped too.
    skipped += total_annotations - joined_ids.len();
    if instances.is_empty() {
        return Err(Error::EmptyJoin);
    }
    Ok(ConvertOutcome { instances, skipped })
}

/// Per-category counts; always covers all six categories.
pub fn category_histogram(instances: &[SqaInstance]) -> BTreeMap<QuestionType, usize> {
    let mut counts: BTreeMap<QuestionType, usize> =
        QuestionType::ALL.iter().map(|qt| (*qt, 0)).collect();
    for instance in instances {
        *counts.get_mut(&instance.category).unwrap() += 1;
    }
    counts
}

/// Scene → frames-directory manifest. Relative directories resolve against
/// the manifest file's location.
#[derive(Debug, Clone)]
pub struct SceneManifest {
    map: BTreeMap<String, PathBuf>,
}

impl SceneManifest {
    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let map: BTreeMap<String, PathBuf> =
            serde_json::from_str(&raw).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let map = map
            .into_iter()
            .map(|(scene, dir)| {
                let dir = match dir.is_relative() {
                    true => base.join(dir),
                    false => dir,
                };
                (scene, dir)
            })
            .collect();
        Ok(SceneManifest { map })
    }

    pub fn from_map(map: BTreeMap<String, PathBuf>) -> Self {
        SceneManifest { map }
    }

    /// Ordered image files for a scene (sorted by file name).
    pub fn frames_for(&self, scene_id: &str) -> Result<Vec<PathBuf>> {
        let dir = self
            .map
            .get(scene_id)
            .ok_or_else(|| Error::UnknownScene(scene_id.to_string()))?;
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut frames: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("png") | Some("jpg") | Some("jpeg") | Some("webp")
                )
            })
            .collect();
        frames.sort();
        Ok(frames)
    }
}
