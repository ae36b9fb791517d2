//! Condition × backend × dataset evaluation driver.
//!
//! Dispatches up to `concurrency` in-flight backend calls, records one
//! [`EvalRecord`] per instance (failures in-band, never aborting the run),
//! and returns records ordered by instance id regardless of completion
//! order.

use std::collections::{HashSet, VecDeque};
use std::sync::Mutex;

use crate::backend::{
    baseline_prompt, run_cot_two_stage, sample_frames, Backend, MediaRef, RequestSettings,
    DEFAULT_FRAME_TARGET,
};
use crate::dataset::{SceneManifest, SqaInstance};
use crate::error::{Error, Result};
use crate::eval::{exact_match, extract_answer, Condition, EvalRecord, PromptProvenance};
use crate::route::{route_rule, route_rule_strict, RoutedPrompt, RouterKind};
use crate::route_llm::{route_llm, DemoSet};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub condition: Condition,
    pub model_id: String,
    pub temperature: f64,
    pub max_output: u32,
    pub frames_target: usize,
    pub concurrency: usize,
    /// Error instead of degrading when a situation-requiring template has
    /// no situation.
    pub strict_situation: bool,
}

impl RunOptions {
    pub fn new(condition: Condition, model_id: impl Into<String>) -> Self {
        RunOptions {
            condition,
            model_id: model_id.into(),
            temperature: crate::backend::DEFAULT_TEMPERATURE,
            max_output: crate::backend::DEFAULT_MAX_OUTPUT,
            frames_target: DEFAULT_FRAME_TARGET,
            concurrency: 4,
            strict_situation: false,
        }
    }

    fn settings(&self) -> RequestSettings {
        RequestSettings {
            model_id: self.model_id.clone(),
            temperature: self.temperature,
            max_output: self.max_output,
        }
    }
}

/// The routing LLM and its demonstrations, required for `route_llm` runs.
pub struct RouterSpec<'a> {
    pub backend: &'a dyn Backend,
    pub demos: &'a DemoSet,
    pub settings: RequestSettings,
}

fn media_for(
    instance: &SqaInstance,
    manifest: &SceneManifest,
    frames_target: usize,
) -> Result<MediaRef> {
    let available = manifest.frames_for(&instance.scene_id)?;
    if available.is_empty() {
        return Err(Error::UnknownScene(format!(
            "{}: frames directory is empty",
            instance.scene_id
        )));
    }
    let indices = sample_frames(available.len(), frames_target);
    let frames = indices.into_iter().map(|i| available[i].clone()).collect();
    Ok(MediaRef::new(frames)?)
}

fn eval_instance(
    instance: &SqaInstance,
    options: &RunOptions,
    answer_backend: &dyn Backend,
    router: Option<&RouterSpec<'_>>,
    manifest: &SceneManifest,
) -> Result<(String, Option<PromptProvenance>)> {
    let media = media_for(instance, manifest, options.frames_target)?;
    let settings = options.settings();
    match options.condition {
        // The situation is withheld for baseline and CoT.
        Condition::Baseline => {
            let prompt = baseline_prompt(&instance.question);
            let response = answer_backend.complete(&settings.request(prompt), Some(&media))?;
            let provenance = PromptProvenance {
                router: RouterKind::Baseline,
                template_id: None,
                question_type: instance.category,
                used_situation: false,
                fell_back: false,
            };
            Ok((response.text, Some(provenance)))
        }
        Condition::Cot => {
            let prompt = baseline_prompt(&instance.question);
            let outcome = run_cot_two_stage(answer_backend, Some(&media), &prompt, &settings)?;
            let provenance = PromptProvenance {
                router: RouterKind::Cot,
                template_id: None,
                question_type: instance.category,
                used_situation: false,
                fell_back: false,
            };
            Ok((outcome.response.text, Some(provenance)))
        }
        Condition::RouteRule => {
            let routed = match options.strict_situation {
                true => route_rule_strict(&instance.question, Some(&instance.situation))?,
                false => route_rule(&instance.question, Some(&instance.situation))?,
            };
            let response =
                answer_backend.complete(&settings.request(routed.prompt_text.clone()), Some(&media))?;
            Ok((response.text, Some(PromptProvenance::from(&routed))))
        }
        Condition::RouteLlm => {
            let router = router.expect("router spec checked before the run");
            let routed: RoutedPrompt = route_llm(
                &instance.question,
                &instance.situation,
                router.demos,
                router.backend,
                &router.settings,
            )?;
            let response =
                answer_backend.complete(&settings.request(routed.prompt_text.clone()), Some(&media))?;
            Ok((response.text, Some(PromptProvenance::from(&routed))))
        }
    }
}

/// Run one condition over the instances. `skip_ids` supports resumption;
/// `on_record` fires as each record completes (under a lock), e.g. to flush
/// a checkpoint file.
pub fn run_eval(
    instances: &[SqaInstance],
    options: &RunOptions,
    answer_backend: &dyn Backend,
    router: Option<&RouterSpec<'_>>,
    manifest: &SceneManifest,
    skip_ids: &HashSet<String>,
    on_record: Option<&(dyn Fn(&EvalRecord) + Sync)>,
) -> Result<Vec<EvalRecord>> {
    if options.condition == Condition::RouteLlm && router.is_none() {
        return Err(Error::Config(
            "route_llm requires a router backend and demo set".into(),
        ));
    }
    if options.concurrency == 0 {
        return Err(Error::Config("concurrency must be at least 1".into()));
    }
    let pending: Vec<&SqaInstance> = instances
        .iter()
        .filter(|i| !skip_ids.contains(&i.id))
        .collect();
    let queue: Mutex<VecDeque<&SqaInstance>> = Mutex::new(pending.into_iter().collect());
    let records: Mutex<Vec<EvalRecord>> = Mutex::new(Vec::new());

    let worker = || loop {
        let instance = match queue.lock().unwrap().pop_front() {
            Some(instance) => instance,
            None => break,
        };
        let record = match eval_instance(instance, options, answer_backend, router, manifest) {
            Ok((raw_output, provenance)) => {
                let extracted = extract_answer(&raw_output);
                let correct = exact_match(&extracted, &instance.gold_answers);
                EvalRecord {
                    instance_id: instance.id.clone(),
                    condition: options.condition,
                    provenance,
                    raw_output,
                    extracted,
                    correct,
                    error: None,
                }
            }
            Err(e) => EvalRecord {
                instance_id: instance.id.clone(),
                condition: options.condition,
                provenance: None,
                raw_output: String::new(),
                extracted: String::new(),
                correct: false,
                error: Some(e.to_string()),
            },
        };
        let mut records = records.lock().unwrap();
        if let Some(callback) = on_record {
            callback(&record);
        }
        records.push(record);
    };

    std::thread::scope(|scope| {
        for _ in 0..options.concurrency.min(instances.len().max(1)) {
            scope.spawn(worker);
        }
    });

    let mut records = records.into_inner().unwrap();
    records.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::mock::MockBackend;
    use std::collections::BTreeMap;
    use std::path::PathBuf;

    fn fixture() -> (tempfile::TempDir, Vec<SqaInstance>, SceneManifest) {
        let dir = tempfile::tempdir().unwrap();
        let frames = dir.path().join("frames");
        std::fs::create_dir_all(&frames).unwrap();
        for i in 0..3 {
            std::fs::write(frames.join(format!("frame_{i:03}.png")), b"png").unwrap();
        }
        let instances = vec![
            SqaInstance {
                id: "q1".into(),
                scene_id: "s1".into(),
                situation: "I am facing the door.".into(),
                question: "How many chairs are there?".into(),
                gold_answers: vec!["two".into()],
                category: crate::QuestionType::How,
            },
            SqaInstance {
                id: "q2".into(),
                scene_id: "s1".into(),
                situation: "I am facing the window.".into(),
                question: "Is the lamp left of the desk?".into(),
                gold_answers: vec!["yes".into()],
                category: crate::QuestionType::Is,
            },
        ];
        let manifest =
            SceneManifest::from_map(BTreeMap::from([("s1".to_string(), frames)]));
        (dir, instances, manifest)
    }

    #[test]
    fn baseline_is_one_call_without_situation() {
        let (_dir, instances, manifest) = fixture();
        let mock = MockBackend::fixed("The answer is two.");
        let options = RunOptions::new(Condition::Baseline, "m");
        let records = run_eval(
            &instances[..1],
            &options,
            &mock,
            None,
            &manifest,
            &HashSet::new(),
            None,
        )
        .unwrap();
        assert_eq!(mock.call_count(), 1);
        assert!(records[0].correct);
        assert!(!mock.log()[0].text.contains("I am facing the door."));
        assert!(mock.log()[0].media_parts >= 1);
    }

    #[test]
    fn cot_is_two_calls_without_situation() {
        let (_dir, instances, manifest) = fixture();
        let mock = MockBackend::fixed("yes");
        let options = RunOptions::new(Condition::Cot, "m");
        run_eval(&instances[1..], &options, &mock, None, &manifest, &HashSet::new(), None).unwrap();
        assert_eq!(mock.call_count(), 2);
        for call in mock.log() {
            assert!(!call.text.contains("I am facing the window."));
        }
    }

    #[test]
    fn rule_route_attaches_situation_for_is() {
        let (_dir, instances, manifest) = fixture();
        let mock = MockBackend::fixed("yes");
        let options = RunOptions::new(Condition::RouteRule, "m");
        let records =
            run_eval(&instances, &options, &mock, None, &manifest, &HashSet::new(), None).unwrap();
        assert_eq!(records.len(), 2);
        let is_call = mock
            .log()
            .into_iter()
            .find(|c| c.text.contains("Is the lamp left of the desk?"))
            .unwrap();
        assert!(is_call.text.contains("I am facing the window."));
    }

    #[test]
    fn route_llm_without_router_is_a_config_error() {
        let (_dir, instances, manifest) = fixture();
        let mock = MockBackend::fixed("x");
        let options = RunOptions::new(Condition::RouteLlm, "m");
        assert!(matches!(
            run_eval(&instances, &options, &mock, None, &manifest, &HashSet::new(), None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn per_instance_failures_are_recorded_in_band() {
        let (_dir, mut instances, manifest) = fixture();
        instances[1].scene_id = "missing-scene".into();
        let mock = MockBackend::fixed("The answer is two.");
        let options = RunOptions::new(Condition::Baseline, "m");
        let records =
            run_eval(&instances, &options, &mock, None, &manifest, &HashSet::new(), None).unwrap();
        assert_eq!(records.len(), 2);
        assert!(records[0].error.is_none());
        assert!(records[1].error.is_some());
        assert!(!records[1].correct);
    }

    #[test]
    fn skip_ids_resume_semantics() {
        let (_dir, instances, manifest) = fixture();
        let mock = MockBackend::fixed("yes");
        let options = RunOptions::new(Condition::Baseline, "m");
        let skip: HashSet<String> = ["q1".to_string()].into();
        let records =
            run_eval(&instances, &options, &mock, None, &manifest, &HashSet::new(), None).unwrap();
        assert_eq!(records.len(), 2);
        let resumed =
            run_eval(&instances, &options, &mock, None, &manifest, &skip, None).unwrap();
        assert_eq!(resumed.len(), 1);
        assert_eq!(resumed[0].instance_id, "q2");
    }

    #[test]
    fn output_is_ordered_by_instance_id() {
        let (_dir, instances, manifest) = fixture();
        let mock = MockBackend::fixed("yes");
        let mut options = RunOptions::new(Condition::Baseline, "m");
        options.concurrency = 8;
        let records =
            run_eval(&instances, &options, &mock, None, &manifest, &HashSet::new(), None).unwrap();
        let ids: Vec<_> = records.iter().map(|r| r.instance_id.clone()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
        let _ = PathBuf::new();
    }
}
