//! Operator CLI: convert datasets, preview routes, run evaluations, render
//! and diff reports.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Parser, Subcommand};

use spatioroute::backend::mock::LoggingBackend;
use spatioroute::backend::replay::ReplayBackend;
use spatioroute::backend::RequestSettings;
use spatioroute::config::RunConfig;
use spatioroute::dataset::{self, SceneManifest};
use spatioroute::error::Error;
use spatioroute::eval::{delta, score, Condition, EvalRecord, EvalReport};
use spatioroute::report::{render_delta, render_report};
use spatioroute::route::route_rule;
use spatioroute::route_llm::{route_llm, DemoSet};
use spatioroute::runner::{run_eval, RouterSpec, RunOptions};
use spatioroute::typology::QuestionType;

#[derive(Parser)]
#[command(name = "spatioroute", version, about = "Prompt routing and zero-shot evaluation for situated spatial video QA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert the official SQA3D questions/annotations pair to canonical JSONL.
    Convert {
        /// Official questions JSON file.
        questions: PathBuf,
        /// Official annotations JSON file.
        annotations: PathBuf,
        /// Output canonical JSONL path.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Preview the routed prompt for one question.
    Route {
        question: String,
        /// Situational description.
        #[arg(short, long)]
        situation: Option<String>,
        /// rule or llm.
        #[arg(long, default_value = "rule")]
        mode: String,
        /// Replay fixture directory backing the llm router.
        #[arg(long)]
        replay_dir: Option<PathBuf>,
        /// Router model id (llm mode).
        #[arg(long, default_value = "router")]
        router_model: String,
    },
    /// Run an evaluation per a JSON run config.
    Eval {
        /// Run config file.
        #[arg(short, long)]
        config: PathBuf,
        /// Override the config's condition.
        #[arg(long)]
        condition: Option<Condition>,
        /// Override the concurrency limit.
        #[arg(long)]
        concurrency: Option<usize>,
        /// Resume from the existing records file, keyed by instance id.
        #[arg(long)]
        resume: bool,
    },
    /// Print the per-category delta table between two report JSON files.
    Diff {
        report_a: PathBuf,
        report_b: PathBuf,
    },
    /// Render a report JSON file as a table.
    Report { report: PathBuf },
}

// Errors that indicate a bad invocation rather than a runtime failure.
fn is_usage_error(error: &Error) -> bool {
    matches!(error, Error::Config(_) | Error::UnknownTemplate(_))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match is_usage_error(&e) {
                true => ExitCode::from(2),
                false => ExitCode::FAILURE,
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Convert { questions, annotations, output } => cmd_convert(&questions, &annotations, &output),
        Command::Route { question, situation, mode, replay_dir, router_model } => {
            cmd_route(&question, situation.as_deref(), &mode, replay_dir.as_deref(), &router_model)
        }
        Command::Eval { config, condition, concurrency, resume } => {
            cmd_eval(&config, condition, concurrency, resume)
        }
        Command::Diff { report_a, report_b } => cmd_diff(&report_a, &report_b),
        Command::Report { report } => cmd_report(&report),
    }
}

fn cmd_convert(questions: &Path, annotations: &Path, output: &Path) -> Result<(), Error> {
    let outcome = dataset::convert_official(questions, annotations)?;
    dataset::write_canonical(&outcome.instances, output)?;
    let histogram = dataset::category_histogram(&outcome.instances);
    println!("total: {}", outcome.instances.len());
    println!("skipped: {}", outcome.skipped);
    for qt in QuestionType::ALL {
        println!("{}: {}", qt.name(), histogram[&qt]);
    }
    Ok(())
}

fn cmd_route(
    question: &str,
    situation: Option<&str>,
    mode: &str,
    replay_dir: Option<&Path>,
    router_model: &str,
) -> Result<(), Error> {
    let routed = match mode {
        "rule" => route_rule(question, situation)?,
        "llm" => {
            let dir = replay_dir.ok_or_else(|| {
                Error::Config("--mode llm requires --replay-dir for the router backend".into())
            })?;
            let backend = ReplayBackend::load_dir(dir)?;
            let situation = situation.ok_or_else(|| {
                Error::Config("--mode llm requires --situation".into())
            })?;
            route_llm(
                question,
                situation,
                &DemoSet::default_set(),
                &backend,
                &RequestSettings::new(router_model),
            )?
        }
        other => return Err(Error::Config(format!("unknown mode {other}; use rule or llm"))),
    };
    println!("router: {:?}", routed.router);
    println!("question_type: {}", routed.question_type);
    match &routed.template_id {
        Some(id) => println!("template: {id}"),
        None => println!("template: (generated)"),
    }
    println!("used_situation: {}", routed.used_situation);
    println!("fell_back: {}", routed.fell_back);
    println!("---");
    println!("{}", routed.prompt_text);
    Ok(())
}

fn load_existing_records(path: &Path) -> Result<Vec<EvalRecord>, Error> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (index, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(line).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            line: index + 1,
            message: e.to_string(),
        })?);
    }
    Ok(records)
}

fn cmd_eval(
    config_path: &Path,
    condition_override: Option<Condition>,
    concurrency_override: Option<usize>,
    resume: bool,
) -> Result<(), Error> {
    let mut config = RunConfig::from_file(config_path)?;
    if let Some(condition) = condition_override {
        config.condition = condition;
    }
    if let Some(concurrency) = concurrency_override {
        config.concurrency = concurrency;
    }
    config.validate()?;

    let base = config_path.parent().unwrap_or(Path::new("."));
    let instances = dataset::load(&config.dataset)?;
    let manifest = SceneManifest::from_file(&config.manifest)?;
    let answer_backend = config.answer_backend.build(base)?;
    let answer_backend = LoggingBackend::new(answer_backend);

    let demos = match &config.demos {
        Some(path) => DemoSet::from_file(path)?,
        None => DemoSet::default_set(),
    };
    let router_backend = config
        .router_backend
        .as_ref()
        .map(|spec| spec.build(base))
        .transpose()?;
    let router_spec = router_backend.as_ref().map(|backend| RouterSpec {
        backend,
        demos: &demos,
        settings: RequestSettings::new(
            config.router_backend.as_ref().unwrap().model_id.clone(),
        ),
    });

    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| Error::io(&config.output_dir, e))?;
    let prefix = config.condition.as_str();
    let records_path = config.output_dir.join(format!("{prefix}.records.jsonl"));

    let mut skip_ids = HashSet::new();
    let mut existing = Vec::new();
    if resume && records_path.exists() {
        existing = load_existing_records(&records_path)?;
        skip_ids = existing.iter().map(|r| r.instance_id.clone()).collect();
        eprintln!("resuming: {} records already present", skip_ids.len());
    }

    // Provenance: the resolved config sits beside the outputs.
    let resolved = config.output_dir.join(format!("{prefix}.config.json"));
    std::fs::write(&resolved, serde_json::to_string_pretty(&config).unwrap())
        .map_err(|e| Error::io(&resolved, e))?;

    let mut options = RunOptions::new(config.condition, config.answer_backend.model_id.clone());
    options.temperature = config.temperature;
    options.max_output = config.max_output;
    options.frames_target = config.frames;
    options.concurrency = config.concurrency;

    // Flush each record as it completes so interrupted runs are resumable.
    let mut open = std::fs::OpenOptions::new();
    open.create(true).write(true);
    match resume {
        true => open.append(true),
        false => open.truncate(true),
    };
    let file = open
        .open(&records_path)
        .map_err(|e| Error::io(&records_path, e))?;
    let sink = Mutex::new(file);
    let flush = |record: &EvalRecord| {
        let mut file = sink.lock().unwrap();
        let line = serde_json::to_string(record).expect("record serializes");
        let _ = writeln!(file, "{line}");
        let _ = file.flush();
    };

    let mut records = run_eval(
        &instances,
        &options,
        &answer_backend,
        router_spec.as_ref(),
        &manifest,
        &skip_ids,
        Some(&flush),
    )?;
    records.extend(existing);
    records.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));

    let report = score(&records, &instances, &options.model_id, config.condition)?;
    let report_path = config.output_dir.join(format!("{prefix}.report.json"));
    std::fs::write(&report_path, serde_json::to_string_pretty(&report).unwrap())
        .map_err(|e| Error::io(&report_path, e))?;
    let table = render_report(&report);
    let table_path = config.output_dir.join(format!("{prefix}.report.txt"));
    std::fs::write(&table_path, &table).map_err(|e| Error::io(&table_path, e))?;
    print!("{table}");
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    if failures > 0 {
        eprintln!("{failures} instance(s) recorded in-band errors");
    }
    Ok(())
}

fn read_report(path: &Path) -> Result<EvalReport, Error> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&raw).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn cmd_diff(report_a: &Path, report_b: &Path) -> Result<(), Error> {
    let a = read_report(report_a)?;
    let b = read_report(report_b)?;
    let d = delta(&a, &b)?;
    print!("{}", render_delta(&d));
    Ok(())
}

fn cmd_report(path: &Path) -> Result<(), Error> {
    let report = read_report(path)?;
    print!("{}", render_report(&report));
    Ok(())
}
