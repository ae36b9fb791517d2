//! Regenerates the checked-in replay fixture under `fixtures/`.
//!
//! Runs the real evaluation driver for all four conditions against a
//! recording backend, so every replay key is derived from exactly the
//! requests the harness builds. Run with:
//!
//! ```bash
//! cargo run -p spatioroute --example gen_fixtures
//! ```

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;
use std::sync::Mutex;

use spatioroute::backend::replay::ReplayRecord;
use spatioroute::backend::{
    replay_key, Backend, BackendError, ChatRequest, ChatResponse, MediaRef, RequestSettings,
    COT_STAGE1_SUFFIX, COT_STAGE2_SUFFIX,
};
use spatioroute::dataset::{self, SceneManifest, SqaInstance};
use spatioroute::eval::Condition;
use spatioroute::route_llm::{DemoSet, ROUTER_META_INSTRUCTION};
use spatioroute::runner::{run_eval, RouterSpec, RunOptions};
use spatioroute::typology::classify;

const ANSWER_MODEL: &str = "fixture-vlm";
const ROUTER_MODEL: &str = "fixture-router";

/// Instance whose router output fails validation, exercising the fallback.
const FALLBACK_ID: &str = "q014";

// Minimal 1x1 transparent PNG.
const TINY_PNG: [u8; 67] = [
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44,
    0x52, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x06, 0x00, 0x00, 0x00, 0x1f,
    0x15, 0xc4, 0x89, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x62, 0x00,
    0x01, 0x00, 0x00, 0x05, 0x00, 0x01, 0x0d, 0x0a, 0x2d, 0xb4, 0x00, 0x00, 0x00, 0x00, 0x49,
    0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82,
];

fn instances() -> Vec<SqaInstance> {
    let rows: [(&str, &str, &str); 24] = [
        ("What is on the table?", "I am standing near the sofa, facing the door.", "lamp"),
        ("What color is the sofa?", "I am standing by the window, facing the sofa.", "red"),
        ("What is behind me?", "I am sitting at the desk, facing the wall.", "window"),
        ("What object is left of the bed?", "I am lying on the bed, facing the ceiling.", "desk"),
        ("Is the lamp left of the desk?", "I am standing at the room center, facing the desk.", "yes"),
        ("Is the door open?", "I am standing near the bookshelf, facing the door.", "no"),
        ("Is there a window behind me?", "I am facing the kitchen counter.", "yes"),
        ("Is the trash can full?", "I am next to the desk, facing the trash can.", "no"),
        ("How many chairs are there?", "I am standing near the sofa, facing the door.", "two"),
        ("How many windows can I see?", "I am at the room center, facing the far wall.", "3"),
        ("How many pillows are on the bed?", "I am standing at the foot of the bed.", "four"),
        ("How many doors are in this room?", "I am in the corner, facing the room.", "1"),
        ("Can I sit on that?", "I am standing next to the armchair, facing it.", "yes"),
        ("Can I reach the shelf from here?", "I am standing by the desk, facing the shelf.", "no"),
        ("Can I walk straight to the door?", "I am near the window, facing the door.", "yes"),
        ("Can I place a cup on the table?", "I am beside the table, facing it.", "yes"),
        ("Which direction should I turn?", "I am facing the bookshelf.", "left"),
        ("Which side is the window on?", "I am facing the bed.", "right"),
        ("Which object is closest to me?", "I am standing in the doorway, facing the room.", "chair"),
        ("Which way is the exit?", "I am at the room center, facing the sofa.", "forward"),
        ("Tell me the number of chairs visible.", "I am standing in the corner, facing the room.", "two"),
        ("Describe the object in front of me.", "I am facing the largest object in the room.", "sofa"),
        ("Name the item on the nightstand.", "I am standing beside the bed.", "clock"),
        ("Count the lamps in the room.", "I am at the door, facing inside.", "2"),
    ];
    rows.iter()
        .enumerate()
        .map(|(i, (question, situation, gold))| SqaInstance {
            id: format!("q{:03}", i + 1),
            scene_id: format!("scene{:04}_00", i % 4),
            situation: situation.to_string(),
            question: question.to_string(),
            gold_answers: vec![gold.to_string()],
            category: classify(question).unwrap(),
        })
        .collect()
}

/// Scripted answer text per instance. One in four answers is wrong so the
/// fixture reports have non-trivial accuracies.
fn answer_text(index: usize, gold: &str) -> String {
    match index % 4 {
        0 => format!("The answer is: {gold}."),
        1 => format!("Answer: {gold}"),
        2 => format!("{gold}."),
        _ => "The answer is: banana.".to_string(),
    }
}

fn router_text(id: &str, question: &str) -> String {
    match id == FALLBACK_ID {
        // Deliberately invalid (no question): forces the rule fallback.
        true => "I cannot help with that request.".to_string(),
        false => format!(
            "Identify what the question asks and answer it from the video frames. {question} Keep the answer short."
        ),
    }
}

/// Backend that answers from the script and records (key, response) pairs.
struct Recorder<'a> {
    instances: &'a [SqaInstance],
    records: Mutex<BTreeMap<String, String>>,
}

impl<'a> Recorder<'a> {
    fn new(instances: &'a [SqaInstance]) -> Self {
        Recorder {
            instances,
            records: Mutex::new(BTreeMap::new()),
        }
    }

    fn target_of(&self, request: &ChatRequest) -> &'a SqaInstance {
        let text = request.text_content();
        let is_router = text.starts_with(ROUTER_META_INSTRUCTION);
        if is_router {
            // The target pair is the last "Question:" block.
            let question = text
                .rsplit("Question: ")
                .next()
                .and_then(|rest| rest.split('\n').next())
                .expect("router request carries a target question");
            self.instances
                .iter()
                .find(|i| i.question == question)
                .expect("target question matches an instance")
        } else {
            self.instances
                .iter()
                .find(|i| text.contains(&i.question))
                .expect("request text contains an instance question")
        }
    }

    fn respond(&self, request: &ChatRequest) -> String {
        let text = request.text_content();
        let instance = self.target_of(request);
        let index = self
            .instances
            .iter()
            .position(|i| i.id == instance.id)
            .unwrap();
        if text.starts_with(ROUTER_META_INSTRUCTION) {
            router_text(&instance.id, &instance.question)
        } else if text.contains(COT_STAGE2_SUFFIX) {
            format!("Given the reasoning above, {}", answer_text(index, &instance.gold_answers[0]))
        } else if text.ends_with(COT_STAGE1_SUFFIX) {
            format!(
                "I look at the frames and focus on what the question needs for {}.",
                instance.id
            )
        } else {
            answer_text(index, &instance.gold_answers[0])
        }
    }

    fn into_records(self) -> Vec<ReplayRecord> {
        self.records
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|(key, response_text)| ReplayRecord { key, response_text })
            .collect()
    }
}

impl Backend for Recorder<'_> {
    fn complete(
        &self,
        request: &ChatRequest,
        media: Option<&MediaRef>,
    ) -> Result<ChatResponse, BackendError> {
        let text = self.respond(request);
        let key = replay_key(request, media);
        self.records.lock().unwrap().insert(key, text.clone());
        Ok(ChatResponse {
            text,
            usage: None,
            latency_ms: 0,
        })
    }
}

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let frames_root = root.join("frames");
    let replay_dir = root.join("replay");
    std::fs::create_dir_all(&replay_dir).unwrap();

    let instances = instances();

    // Frames: four scenes, four 1x1 PNGs each.
    let mut manifest_map = BTreeMap::new();
    for scene_index in 0..4 {
        let scene_id = format!("scene{scene_index:04}_00");
        let dir = frames_root.join(&scene_id);
        std::fs::create_dir_all(&dir).unwrap();
        for frame in 0..4 {
            std::fs::write(dir.join(format!("frame_{frame:03}.png")), TINY_PNG).unwrap();
        }
        manifest_map.insert(scene_id.clone(), PathBuf::from("frames").join(&scene_id));
    }

    dataset::write_canonical(&instances, &root.join("dataset.jsonl")).unwrap();
    let manifest_json: BTreeMap<&String, String> = manifest_map
        .iter()
        .map(|(scene, path)| (scene, path.to_string_lossy().into_owned()))
        .collect();
    std::fs::write(
        root.join("manifest.json"),
        serde_json::to_string_pretty(&manifest_json).unwrap(),
    )
    .unwrap();

    let manifest = SceneManifest::from_file(&root.join("manifest.json")).unwrap();
    let demos = DemoSet::default_set();

    let answer_recorder = Recorder::new(&instances);
    let router_recorder = Recorder::new(&instances);

    for condition in Condition::ALL {
        let mut options = RunOptions::new(condition, ANSWER_MODEL);
        options.concurrency = 1;
        let router_spec = match condition {
            Condition::RouteLlm => Some(RouterSpec {
                backend: &router_recorder,
                demos: &demos,
                settings: RequestSettings::new(ROUTER_MODEL),
            }),
            _ => None,
        };
        let records = run_eval(
            &instances,
            &options,
            &answer_recorder,
            router_spec.as_ref(),
            &manifest,
            &HashSet::new(),
            None,
        )
        .unwrap();
        let failures = records.iter().filter(|r| r.error.is_some()).count();
        assert_eq!(failures, 0, "{condition}: fixture generation must be clean");
        println!(
            "{condition}: {} records, {} correct",
            records.len(),
            records.iter().filter(|r| r.correct).count()
        );
    }

    let mut all = answer_recorder.into_records();
    all.extend(router_recorder.into_records());
    all.sort_by(|a, b| a.key.cmp(&b.key));
    std::fs::write(
        replay_dir.join("records.json"),
        serde_json::to_string_pretty(&all).unwrap(),
    )
    .unwrap();
    println!("wrote {} replay records to {}", all.len(), replay_dir.display());
}
