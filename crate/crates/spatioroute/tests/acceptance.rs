//! Acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see them). Criteria 9 and 10
//! depend on external resources and print SKIP when the corresponding
//! environment variables are absent.

use std::collections::HashSet;
use std::path::PathBuf;
use std::time::Instant;

use spatioroute::backend::mock::{LoggingBackend, MockBackend};
use spatioroute::backend::replay::ReplayBackend;
use spatioroute::backend::{run_cot_two_stage, RequestSettings, COT_STAGE1_SUFFIX};
use spatioroute::dataset::{self, category_histogram, SceneManifest, SqaInstance};
use spatioroute::eval::{
    delta, extract_answer, score, Condition, EvalReport,
};
use spatioroute::report::round2;
use spatioroute::route::route_rule;
use spatioroute::route_llm::DemoSet;
use spatioroute::runner::{run_eval, RouterSpec, RunOptions};
use spatioroute::templates::{self, TemplateId};
use spatioroute::QuestionType;

const ANSWER_MODEL: &str = "fixture-vlm";
const ROUTER_MODEL: &str = "fixture-router";

/// Published question counts per category (What/Is/How/Can/Which/Others).
const CATEGORY_COUNTS: [u64; 6] = [1147, 652, 432, 338, 351, 599];

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn fixtures_dir() -> PathBuf {
    manifest_dir().join("fixtures")
}

fn fixture_instances() -> Vec<SqaInstance> {
    dataset::load(&fixtures_dir().join("dataset.jsonl")).unwrap()
}

fn fixture_manifest() -> SceneManifest {
    SceneManifest::from_file(&fixtures_dir().join("manifest.json")).unwrap()
}

fn fixture_replay() -> ReplayBackend {
    ReplayBackend::load_dir(&fixtures_dir().join("replay")).unwrap()
}

fn pass(n: u32, what: &str) {
    println!("acceptance criterion {n:02} ({what}): PASS");
}

fn skip(n: u32, what: &str, why: &str) {
    println!("acceptance criterion {n:02} ({what}): SKIP ({why})");
}

#[test]
fn criterion_01_routing_table_conformance() {
    let started = Instant::now();
    let expected: [(QuestionType, &[&str], TemplateId); 6] = [
        (QuestionType::What, &["What"], TemplateId::DetailsScene),
        (QuestionType::Is, &["Is"], TemplateId::StepByStep),
        (QuestionType::How, &["How"], TemplateId::DetailsScene),
        (QuestionType::Can, &["Can"], TemplateId::SceneUnderstanding),
        (QuestionType::Which, &["Which"], TemplateId::DetailsScene),
        (
            QuestionType::Others,
            &["Are", "Does", "Do", "Where", "Tell", "Name", "Count", "Describe", "Please", "Look"],
            TemplateId::InstructionFocused,
        ),
    ];
    let mut questions = 0usize;
    let mut violations = 0usize;
    for (category, leaders, template_id) in expected {
        for i in 0..100 {
            let leader = leaders[i % leaders.len()];
            let question = format!("{leader} object number {i} near the door?");
            let routed = route_rule(&question, Some("I am facing the door.")).unwrap();
            questions += 1;
            if routed.question_type != category || routed.template_id != Some(template_id) {
                violations += 1;
            }
        }
    }
    assert_eq!(questions, 600);
    assert_eq!(violations, 0, "routing-table violations");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget is 1 s");
    pass(1, "routing-table conformance over 600 synthetic questions");
}

#[test]
fn criterion_02_template_byte_exactness() {
    let golden: [(&str, &str); 5] = [
        ("details_scene.txt", templates::DETAILS_SCENE_BODY),
        ("step_by_step.txt", templates::STEP_BY_STEP_BODY),
        ("scene_understanding.txt", templates::SCENE_UNDERSTANDING_BODY),
        ("instruction_focused.txt", templates::INSTRUCTION_FOCUSED_BODY),
        ("situation_prefix.txt", templates::SITUATION_PREFIX_BODY),
    ];
    for (file, compiled) in golden {
        let on_disk = std::fs::read(manifest_dir().join("templates").join(file)).unwrap();
        assert_eq!(
            on_disk,
            compiled.as_bytes(),
            "{file} diverges from the compiled body"
        );
    }
    for template in &templates::LIBRARY {
        assert_eq!(
            template.body.matches("{question}").count(),
            1,
            "{}: exactly one question placeholder",
            template.id
        );
    }
    assert_eq!(
        templates::SITUATION_PREFIX_BODY.matches("{situation}").count(),
        1
    );
    pass(2, "template bodies byte-identical to golden files");
}

/// Per-category accuracies (What/Is/How/Can/Which/Others) and the published
/// overall for the ten routed rows.
const ROUTED_ROWS: [(&str, [f64; 6], f64); 10] = [
    ("Qwen2-2B+R", [38.45, 57.36, 41.20, 61.83, 45.30, 47.42], 46.7),
    ("Qwen2-7B+R", [43.07, 61.96, 45.37, 53.25, 51.28, 48.22], 49.5),
    ("Qwen2.5-3B+R", [43.50, 57.67, 36.57, 55.33, 42.45, 48.16], 47.1),
    ("Qwen3-2B+R", [44.12, 58.37, 47.22, 56.21, 54.42, 49.59], 50.3),
    ("Llama3.2-11B+R", [21.36, 25.61, 20.14, 21.89, 37.61, 24.37], 24.2),
    ("Qwen2-2B+L", [37.49, 56.29, 41.90, 61.24, 45.01, 44.75], 45.7),
    ("Qwen2-7B+L", [42.02, 61.04, 44.68, 54.73, 47.86, 49.01], 48.8),
    ("Qwen2.5-3B+L", [42.46, 56.13, 37.27, 54.73, 43.75, 47.85], 46.5),
    ("Qwen3-2B+L", [42.02, 58.99, 47.51, 57.10, 54.42, 50.25], 49.9),
    ("Llama3.2-11B+L", [21.62, 24.39, 20.60, 21.01, 37.32, 24.58], 24.0),
];

#[test]
fn criterion_03_overall_accuracy_oracle() {
    let started = Instant::now();
    assert_eq!(CATEGORY_COUNTS.iter().sum::<u64>(), 3519);
    for (row, accuracies, published_overall) in ROUTED_ROWS {
        let cells: Vec<(QuestionType, f64, u64)> = QuestionType::ALL
            .iter()
            .zip(accuracies.iter().zip(CATEGORY_COUNTS.iter()))
            .map(|(qt, (a, c))| (*qt, *a, *c))
            .collect();
        let report = EvalReport::from_accuracies(row, Condition::RouteRule, &cells);
        let weighted = report.weighted_overall().unwrap();
        let gap = (weighted - published_overall).abs();
        assert!(
            gap <= 0.15,
            "{row}: weighted mean {weighted:.3} vs published {published_overall} (gap {gap:.3})"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget is 1 s");
    pass(3, "count-weighted means match published overalls within 0.15");
}

/// Baseline per-category accuracies and the published CoT − Baseline deltas.
const COT_DELTA_ROWS: [(&str, [f64; 6], [f64; 6]); 5] = [
    (
        "Qwen2-2B",
        [35.40, 51.07, 37.73, 60.36, 35.33, 43.98],
        [-0.96, 4.14, -8.10, -20.12, 0.28, -4.95],
    ),
    (
        "Qwen2-7B",
        [41.41, 60.28, 44.21, 57.40, 42.17, 49.09],
        [-3.92, -1.08, -18.75, -6.81, -2.57, -6.62],
    ),
    (
        "Qwen2.5-3B",
        [37.58, 54.14, 41.90, 55.92, 45.30, 46.97],
        [-6.02, -2.91, -9.72, -11.25, -5.41, -7.07],
    ),
    (
        "Qwen3-2B",
        [41.50, 59.82, 46.06, 56.21, 50.43, 50.80],
        [-2.96, 0.00, -3.24, -0.29, 3.42, -0.61],
    ),
    (
        "Llama3.2",
        [20.40, 23.47, 19.68, 17.75, 37.32, 23.72],
        [2.09, 15.95, 1.15, 7.99, -1.14, 5.21],
    ),
];

#[test]
fn criterion_04_delta_oracle() {
    for (model, baseline, deltas) in COT_DELTA_ROWS {
        let base_cells: Vec<(QuestionType, f64, u64)> = QuestionType::ALL
            .iter()
            .zip(baseline.iter().zip(CATEGORY_COUNTS.iter()))
            .map(|(qt, (a, c))| (*qt, *a, *c))
            .collect();
        let cot_cells: Vec<(QuestionType, f64, u64)> = QuestionType::ALL
            .iter()
            .zip(baseline.iter().zip(deltas.iter().zip(CATEGORY_COUNTS.iter())))
            .map(|(qt, (a, (d, c)))| (*qt, a + d, *c))
            .collect();
        let base_report = EvalReport::from_accuracies(model, Condition::Baseline, &base_cells);
        let cot_report = EvalReport::from_accuracies(model, Condition::Cot, &cot_cells);
        let diff = delta(&cot_report, &base_report).unwrap();
        for (qt, expected) in QuestionType::ALL.iter().zip(deltas.iter()) {
            let got = round2(diff.per_category[qt].unwrap());
            assert!(
                (got - expected).abs() < 1e-9,
                "{model} {qt}: delta {got} vs published {expected}"
            );
        }
        let self_diff = delta(&base_report, &base_report).unwrap();
        for cell in self_diff.per_category.values() {
            assert_eq!(round2(cell.unwrap()), 0.0);
        }
        assert_eq!(round2(self_diff.overall.unwrap()), 0.0);
    }
    pass(4, "published CoT deltas reproduced exactly; delta(x, x) is zero");
}

fn run_fixture_condition(condition: Condition, concurrency: usize) -> (String, String) {
    let instances = fixture_instances();
    let manifest = fixture_manifest();
    let replay = fixture_replay();
    let demos = DemoSet::default_set();
    let mut options = RunOptions::new(condition, ANSWER_MODEL);
    options.concurrency = concurrency;
    let router_spec = match condition {
        Condition::RouteLlm => Some(RouterSpec {
            backend: &replay,
            demos: &demos,
            settings: RequestSettings::new(ROUTER_MODEL),
        }),
        _ => None,
    };
    let records = run_eval(
        &instances,
        &options,
        &replay,
        router_spec.as_ref(),
        &manifest,
        &HashSet::new(),
        None,
    )
    .unwrap();
    assert!(records.iter().all(|r| r.error.is_none()), "{condition}: clean replay");
    let report = score(&records, &instances, ANSWER_MODEL, condition).unwrap();
    (
        serde_json::to_string_pretty(&records).unwrap(),
        serde_json::to_string_pretty(&report).unwrap(),
    )
}

#[test]
fn criterion_05_replay_determinism() {
    for condition in Condition::ALL {
        let reference = run_fixture_condition(condition, 1);
        for concurrency in [1usize, 4, 8] {
            for repeat in 0..5 {
                let run = run_fixture_condition(condition, concurrency);
                assert_eq!(
                    run, reference,
                    "{condition}: run diverged (concurrency {concurrency}, repeat {repeat})"
                );
            }
        }
    }
    pass(5, "replay fixture byte-identical across 5 runs and concurrency 1/4/8");
}

#[test]
fn criterion_06_cot_structure() {
    let instances = fixture_instances();
    let manifest = fixture_manifest();

    // Baseline: exactly one call, situation withheld.
    let baseline_mock = MockBackend::fixed("The answer is: lamp.");
    let options = RunOptions::new(Condition::Baseline, ANSWER_MODEL);
    run_eval(
        &instances[..1],
        &options,
        &baseline_mock,
        None,
        &manifest,
        &HashSet::new(),
        None,
    )
    .unwrap();
    assert_eq!(baseline_mock.call_count(), 1, "baseline issues exactly one call");
    assert!(!baseline_mock.log()[0].text.contains(&instances[0].situation));

    // CoT over the run driver: two calls, both without the situation.
    let cot_mock = MockBackend::new(|request, _| {
        Ok(match request.text_content().ends_with(COT_STAGE1_SUFFIX) {
            true => "STAGE1-REASONING-MARKER".to_string(),
            false => "The answer is: lamp.".to_string(),
        })
    });
    let options = RunOptions::new(Condition::Cot, ANSWER_MODEL);
    run_eval(
        &instances[..1],
        &options,
        &cot_mock,
        None,
        &manifest,
        &HashSet::new(),
        None,
    )
    .unwrap();
    let log = cot_mock.log();
    assert_eq!(cot_mock.call_count(), 2, "CoT issues exactly two calls");
    assert!(
        log[1].text.contains("STAGE1-REASONING-MARKER"),
        "stage-2 request carries stage-1 output verbatim"
    );
    for call in &log {
        assert!(!call.text.contains(&instances[0].situation));
    }

    // Same structural contract straight through run_cot_two_stage.
    let direct = MockBackend::new(|request, _| {
        Ok(match request.text_content().ends_with(COT_STAGE1_SUFFIX) {
            true => "because the lamp sits on the table".to_string(),
            false => "lamp".to_string(),
        })
    });
    let settings = RequestSettings::new(ANSWER_MODEL);
    let outcome =
        run_cot_two_stage(&direct, None, "Question: What is on the table? Answer:", &settings)
            .unwrap();
    assert_eq!(direct.call_count(), 2);
    assert_eq!(outcome.reasoning, "because the lamp sits on the table");
    assert!(direct.log()[1].text.contains("because the lamp sits on the table"));
    pass(6, "CoT issues 2 calls with stage-1 output forwarded; baseline issues 1");
}

#[test]
fn criterion_07_video_free_router() {
    let instances = fixture_instances();
    let manifest = fixture_manifest();
    let answer_backend = LoggingBackend::new(fixture_replay());
    let router_backend = LoggingBackend::new(fixture_replay());
    let demos = DemoSet::default_set();
    let options = RunOptions::new(Condition::RouteLlm, ANSWER_MODEL);
    let router_spec = RouterSpec {
        backend: &router_backend,
        demos: &demos,
        settings: RequestSettings::new(ROUTER_MODEL),
    };
    let records = run_eval(
        &instances,
        &options,
        &answer_backend,
        Some(&router_spec),
        &manifest,
        &HashSet::new(),
        None,
    )
    .unwrap();
    assert!(records.iter().all(|r| r.error.is_none()));

    let router_log = router_backend.log();
    let answer_log = answer_backend.log();
    assert_eq!(router_log.len(), instances.len());
    assert_eq!(answer_log.len(), instances.len());
    for call in &router_log {
        assert_eq!(call.media_parts, 0, "router request must carry no media");
    }
    for call in &answer_log {
        assert!(call.media_parts >= 1, "answer request must carry media");
    }
    pass(7, "router requests carry zero media parts, answer requests carry frames");
}

#[test]
fn criterion_08_normalizer_properties() {
    #[derive(serde::Deserialize)]
    struct Case {
        input: String,
        expected: String,
    }
    let raw = std::fs::read_to_string(
        manifest_dir().join("tests").join("data").join("normalizer_cases.json"),
    )
    .unwrap();
    let cases: Vec<Case> = serde_json::from_str(&raw).unwrap();
    assert_eq!(cases.len(), 40, "oracle table carries 40 cases");
    for case in &cases {
        assert_eq!(
            extract_answer(&case.input),
            case.expected,
            "input {:?}",
            case.input
        );
    }

    use proptest::prelude::*;
    use proptest::test_runner::{Config, TestRunner};
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&any::<String>(), |s| {
            let once = extract_answer(&s);
            prop_assert_eq!(extract_answer(&once), once.clone(), "not idempotent");
            Ok(())
        })
        .unwrap();
    pass(8, "40-case normalizer oracle and 1000-case idempotence property");
}

#[test]
fn criterion_09_official_dataset_statistics() {
    let what = "official dataset statistics";
    let (questions, annotations) = match (
        std::env::var("SQA3D_QUESTIONS"),
        std::env::var("SQA3D_ANNOTATIONS"),
    ) {
        (Ok(q), Ok(a)) => (PathBuf::from(q), PathBuf::from(a)),
        _ => {
            skip(9, what, "set SQA3D_QUESTIONS and SQA3D_ANNOTATIONS to enable");
            return;
        }
    };
    let outcome = dataset::convert_official(&questions, &annotations).unwrap();
    assert_eq!(outcome.instances.len(), 3519, "official test split size");
    let histogram = category_histogram(&outcome.instances);
    let total: usize = histogram.values().sum();
    assert_eq!(total, 3519);
    for (qt, expected) in QuestionType::ALL.iter().zip(CATEGORY_COUNTS.iter()) {
        let got = histogram[qt];
        // Deviations are findings against the leading-token assumption, not
        // failures; only the total is load-bearing.
        if got as u64 != *expected {
            println!("finding: category {qt} has {got} questions, published {expected}");
        } else {
            println!("category {qt}: {got} (matches published count)");
        }
    }
    pass(9, what);
}

#[test]
fn criterion_10_live_smoke() {
    let what = "live endpoint smoke run";
    let (endpoint, model_id) = match (
        std::env::var("SPATIOROUTE_LIVE_ENDPOINT"),
        std::env::var("SPATIOROUTE_LIVE_MODEL"),
    ) {
        (Ok(e), Ok(m)) => (e, m),
        _ => {
            skip(
                10,
                what,
                "set SPATIOROUTE_LIVE_ENDPOINT and SPATIOROUTE_LIVE_MODEL to enable",
            );
            return;
        }
    };
    let api_key_env = std::env::var("SPATIOROUTE_LIVE_API_KEY_ENV").ok();

    // One instance per category, six in total, drawn from the fixture set.
    let all = fixture_instances();
    let mut picked: Vec<SqaInstance> = Vec::new();
    for qt in QuestionType::ALL {
        picked.push(all.iter().find(|i| i.category == qt).unwrap().clone());
    }

    let dir = tempfile::tempdir().unwrap();
    dataset::write_canonical(&picked, &dir.path().join("dataset.jsonl")).unwrap();
    // Absolute frame directories, so the manifest works from the temp dir.
    let frames_root = fixtures_dir().join("frames");
    let manifest: std::collections::BTreeMap<String, String> = picked
        .iter()
        .map(|i| {
            (
                i.scene_id.clone(),
                frames_root.join(&i.scene_id).to_string_lossy().into_owned(),
            )
        })
        .collect();
    std::fs::write(
        dir.path().join("manifest.json"),
        serde_json::to_string_pretty(&manifest).unwrap(),
    )
    .unwrap();

    let backend = serde_json::json!({
        "kind": "live",
        "endpoint": endpoint,
        "model_id": model_id,
        "api_key_env": api_key_env,
    });
    for condition in Condition::ALL {
        let config = serde_json::json!({
            "dataset": "dataset.jsonl",
            "manifest": "manifest.json",
            "condition": condition.as_str(),
            "answer_backend": backend,
            "router_backend": backend,
            "frames": 4,
            "output_dir": "out",
        });
        let config_path = dir.path().join(format!("{condition}.json"));
        std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_spatioroute"))
            .args(["eval", "-c"])
            .arg(&config_path)
            .status()
            .unwrap();
        assert!(status.success(), "{condition}: live run failed");
        let report_raw =
            std::fs::read_to_string(dir.path().join("out").join(format!("{condition}.report.json")))
                .unwrap();
        let report: EvalReport = serde_json::from_str(&report_raw).unwrap();
        assert_eq!(report.overall.total, 6, "{condition}: six instances scored");
    }
    pass(10, what);
}
