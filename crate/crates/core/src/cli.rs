//! Command-line front end. The `funcmapper` binary only forwards to [`run`].

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use crate::classifier::{classify, score, CategorySet, KeywordTable};
use crate::clause::{preprocess, PipelineConfig, ProcessedCorpus, RawCorpus, PROCESSED_SCHEMA};
use crate::engine::{run_check, CheckResult, CheckSpec, EngineConfig};
use crate::eval::{
    render_for_variant, run_benchmark, usage_statistics, BenchmarkConfig, BenchmarkContext, ComparisonReport,
    Variant, DEFAULT_K,
};
use crate::llm::{CompletionBackend, CompletionConfig, HttpBackend, MockBackend, MockFixture};
use crate::model::BuildingModel;
use crate::prompt::PromptTemplate;
use crate::registry::FunctionRegistry;
use crate::shipped;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "funcmapper", version, about = "Identify atomic rule-checking functions for building-code clauses")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split, flatten and screen a raw corpus into clauses.
    Preprocess(CommonArgs),
    /// Classify clauses into function categories; scores against gold when present.
    Classify(CommonArgs),
    /// Render the prompt for one clause.
    Prompt {
        #[command(flatten)]
        common: CommonArgs,
        /// Clause id, e.g. FPC:5.1.3:1.
        #[arg(long)]
        clause: String,
        #[arg(long, value_enum, default_value_t = VariantArg::Full)]
        variant: VariantArg,
        /// Fail when the estimated prompt size exceeds this many tokens.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Run identification and write the ranked function list of every clause.
    Identify {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, value_enum, default_value_t = VariantArg::Refined)]
        variant: VariantArg,
    },
    /// Score identification with Recall@k.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, value_enum, default_value_t = EvalVariantArg::Both)]
        variant: EvalVariantArg,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
    },
    /// Function, category and object-kind usage over the annotated corpus.
    Stats(CommonArgs),
    /// Run checks against a building model.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        /// Building model document; the bundled fixture when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Check document; the bundled checks when omitted.
        #[arg(long)]
        checks: Option<PathBuf>,
        /// Horizontal gap (mm) under which two boxes count as adjacent.
        #[arg(long, default_value_t = 50.0)]
        adjacency_tolerance: f64,
    },
}

/// Input paths shared by every subcommand. Omitted paths use the bundled data.
#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Raw or already preprocessed corpus. Defaults to the bundled code corpus,
    /// or the bundled benchmark for `identify` and `evaluate`.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub pipeline: Option<PathBuf>,
    #[arg(long)]
    pub keywords: Option<PathBuf>,
    #[arg(long)]
    pub template: Option<PathBuf>,
    /// Directory receiving every artifact and the run-config echo.
    #[arg(long, default_value = "funcmapper-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value_t = BackendArg::Mock)]
    pub backend: BackendArg,
    /// Mock response fixture; the bundled one when omitted.
    #[arg(long)]
    pub mock: Option<PathBuf>,
    /// TOML file with completion settings for the live backend.
    #[arg(long)]
    pub llm_config: Option<PathBuf>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub llm_model: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendArg {
    Mock,
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Full,
    Refined,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Full => Variant::Full,
            VariantArg::Refined => Variant::Refined,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalVariantArg {
    Full,
    Refined,
    Both,
}

/// Echo of every setting a run used, written next to its artifacts.
#[derive(Debug, Serialize)]
pub struct RunConfig<'a> {
    pub command: &'a str,
    pub paths: &'a CommonArgs,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<&'a BackendArgs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<&'a Path>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<&'a Path>,
    pub verbosity: u8,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Config(String),
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::from_default_env().filter_level(level).try_init();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

pub fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let mut echo = RunConfig {
        command: "",
        paths: common(&cli.command),
        backend: None,
        variant: None,
        k: None,
        model: None,
        checks: None,
        verbosity: cli.verbose,
    };
    match &cli.command {
        Command::Preprocess(c) => {
            echo.command = "preprocess";
            prepare_out(&echo)?;
            let processed = load_corpus(c)?;
            write(&c.out.join("processed.json"), &processed.to_json())?;
            let counts = &processed.counts;
            println!(
                "{} clauses ({} split, {} from tables), {} processable, {} annotated",
                counts.total_clauses, counts.split_clauses, counts.flattened_clauses, counts.processable, counts.annotated
            );
            Ok(EXIT_OK)
        }
        Command::Classify(c) => {
            echo.command = "classify";
            prepare_out(&echo)?;
            let processed = load_corpus(c)?;
            let keywords = load_keywords(c)?;
            let mut rows = Vec::new();
            let (mut predicted, mut gold) = (Vec::new(), Vec::new());
            for clause in processed.processable() {
                let categories = classify(clause, &keywords);
                if let Some(g) = &clause.gold {
                    predicted.push(categories.clone());
                    gold.push(CategorySet(g.categories.clone()));
                }
                rows.push(serde_json::json!({ "clause_id": clause.id, "categories": categories }));
            }
            write_json(&c.out.join("classification.json"), &rows)?;
            if gold.is_empty() {
                println!("{} clauses classified; no gold categories to score against", rows.len());
            } else {
                let report = score(&predicted, &gold).map_err(config_err)?;
                write_json(&c.out.join("prf1.json"), &report)?;
                write(&c.out.join("prf1.txt"), &report.to_table())?;
                print!("{}", report.to_table());
            }
            Ok(EXIT_OK)
        }
        Command::Prompt {
            common: c,
            clause,
            variant,
            budget,
        } => {
            echo.command = "prompt";
            echo.variant = Some(Variant::from(*variant).to_string());
            prepare_out(&echo)?;
            let bundled = if c.corpus.is_none() && clause.starts_with("BENCH:") {
                shipped::BENCHMARK_CORPUS
            } else {
                shipped::CORPUS
            };
            let processed = load_corpus_or(c, bundled)?;
            let clause = processed
                .find(clause)
                .ok_or_else(|| CliError::Config(format!("no clause with id `{clause}`")))?;
            let registry = load_registry(c)?;
            let template = load_template(c)?;
            let keywords = load_keywords(c)?;
            let ctx = BenchmarkContext {
                registry: &registry,
                template: &template,
                keywords: &keywords,
            };
            let text = render_for_variant(clause, (*variant).into(), &ctx, *budget).map_err(config_err)?;
            let name = format!("prompt-{}-{}.txt", file_safe(&clause.id), Variant::from(*variant));
            write(&c.out.join(name), &text)?;
            print!("{text}");
            Ok(EXIT_OK)
        }
        Command::Identify {
            common: c,
            backend,
            variant,
        } => {
            echo.command = "identify";
            echo.backend = Some(backend);
            echo.variant = Some(Variant::from(*variant).to_string());
            prepare_out(&echo)?;
            let processed = load_corpus_or(c, shipped::BENCHMARK_CORPUS)?;
            let registry = load_registry(c)?;
            let template = load_template(c)?;
            let keywords = load_keywords(c)?;
            let client = make_backend(backend)?;
            let ctx = BenchmarkContext {
                registry: &registry,
                template: &template,
                keywords: &keywords,
            };
            let config = BenchmarkConfig {
                max_in_flight: backend.max_in_flight,
                ..BenchmarkConfig::default()
            };
            let (_, lists) =
                run_benchmark(&processed, (*variant).into(), client.as_ref(), &ctx, &config).map_err(config_err)?;
            write_json(&c.out.join(format!("identifications-{}.json", Variant::from(*variant))), &lists)?;
            for list in &lists {
                let names: Vec<&str> = list.items.iter().map(|i| i.raw_text.as_str()).collect();
                println!("{}: {}", list.clause_id, names.join("; "));
            }
            Ok(EXIT_OK)
        }
        Command::Evaluate {
            common: c,
            backend,
            variant,
            k,
        } => {
            echo.command = "evaluate";
            echo.backend = Some(backend);
            echo.variant = Some(format!("{variant:?}").to_lowercase());
            echo.k = Some(*k);
            if *k < 1 {
                return Err(CliError::Config("--k must be at least 1".into()));
            }
            prepare_out(&echo)?;
            let processed = load_corpus_or(c, shipped::BENCHMARK_CORPUS)?;
            let registry = load_registry(c)?;
            let template = load_template(c)?;
            let keywords = load_keywords(c)?;
            let client = make_backend(backend)?;
            let ctx = BenchmarkContext {
                registry: &registry,
                template: &template,
                keywords: &keywords,
            };
            let config = BenchmarkConfig {
                k: *k,
                max_in_flight: backend.max_in_flight,
                budget_tokens: None,
            };
            let variants: &[Variant] = match variant {
                EvalVariantArg::Full => &[Variant::Full],
                EvalVariantArg::Refined => &[Variant::Refined],
                EvalVariantArg::Both => &[Variant::Full, Variant::Refined],
            };
            let mut reports = Vec::new();
            for v in variants {
                let (report, _) =
                    run_benchmark(&processed, *v, client.as_ref(), &ctx, &config).map_err(config_err)?;
                write(&c.out.join(format!("evaluation-{v}.json")), &report.to_json())?;
                println!("{}", report.aggregate_line());
                reports.push(report);
            }
            if let [full, refined] = reports.as_slice() {
                let comparison = ComparisonReport::new(full, refined);
                write_json(&c.out.join("comparison.json"), &comparison)?;
                write(&c.out.join("comparison.txt"), &comparison.to_table())?;
            }
            Ok(EXIT_OK)
        }
        Command::Stats(c) => {
            echo.command = "stats";
            prepare_out(&echo)?;
            let processed = load_corpus(c)?;
            let registry = load_registry(c)?;
            let report = usage_statistics(&processed, &registry).map_err(config_err)?;
            write(&c.out.join("statistics.json"), &report.to_json())?;
            write(&c.out.join("statistics.txt"), &report.to_text())?;
            print!("{}", report.to_text());
            Ok(EXIT_OK)
        }
        Command::Check {
            common: c,
            model,
            checks,
            adjacency_tolerance,
        } => {
            echo.command = "check";
            echo.model = model.as_deref();
            echo.checks = checks.as_deref();
            prepare_out(&echo)?;
            let registry = load_registry(c)?;
            let building = match model {
                Some(p) => BuildingModel::from_json(&read(p)?).map_err(config_err)?,
                None => shipped::poc_model(),
            };
            let specs = match checks {
                Some(p) => CheckSpec::list_from_json(&read(p)?).map_err(config_err)?,
                None => shipped::poc_checks(),
            };
            let config = EngineConfig {
                adjacency_tolerance_mm: *adjacency_tolerance,
            };
            let mut results: Vec<CheckResult> = Vec::new();
            for spec in &specs {
                let result = run_check(&building, spec, &registry, &config).map_err(config_err)?;
                info!("check {}: {} entities in scope", spec.id, result.entities.len());
                for line in result.lines() {
                    println!("{line}");
                }
                results.push(result);
            }
            write_json(&c.out.join("check-results.json"), &results)?;
            Ok(if results.iter().all(|r| r.passed) {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            })
        }
    }
}

fn common(command: &Command) -> &CommonArgs {
    match command {
        Command::Preprocess(c) | Command::Classify(c) | Command::Stats(c) => c,
        Command::Prompt { common, .. }
        | Command::Identify { common, .. }
        | Command::Evaluate { common, .. }
        | Command::Check { common, .. } => common,
    }
}

fn prepare_out(echo: &RunConfig<'_>) -> Result<(), CliError> {
    let out = &echo.paths.out;
    fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.clone(),
        source,
    })?;
    write_json(&out.join("run-config.json"), echo)
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    write(path, &serde_json::to_string_pretty(value).expect("artifacts serialize"))
}

fn file_safe(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn load_registry(c: &CommonArgs) -> Result<FunctionRegistry, CliError> {
    match &c.registry {
        Some(p) => FunctionRegistry::load(&read(p)?).map_err(config_err),
        None => Ok(shipped::registry()),
    }
}

fn load_keywords(c: &CommonArgs) -> Result<KeywordTable, CliError> {
    match &c.keywords {
        Some(p) => KeywordTable::from_toml(&read(p)?).map_err(config_err),
        None => Ok(shipped::keywords()),
    }
}

fn load_template(c: &CommonArgs) -> Result<PromptTemplate, CliError> {
    let template = match &c.template {
        Some(p) => PromptTemplate::from_toml(&read(p)?).map_err(config_err)?,
        None => shipped::template(),
    };
    template.validate(&load_registry(c)?).map_err(config_err)?;
    Ok(template)
}

fn load_corpus(c: &CommonArgs) -> Result<ProcessedCorpus, CliError> {
    load_corpus_or(c, shipped::CORPUS)
}

/// Accepts a raw corpus (preprocessed on the fly) or a preprocessed one.
/// `bundled` is used when no path was given.
fn load_corpus_or(c: &CommonArgs, bundled: &str) -> Result<ProcessedCorpus, CliError> {
    let text = match &c.corpus {
        Some(p) => read(p)?,
        None => bundled.to_string(),
    };
    let schema = serde_json::from_str::<serde_json::Value>(&text)
        .map_err(config_err)?
        .get("schema")
        .and_then(|s| s.as_str().map(str::to_string));
    if schema.as_deref() == Some(PROCESSED_SCHEMA) {
        return ProcessedCorpus::from_json(&text).map_err(config_err);
    }
    let raw = RawCorpus::from_json(&text).map_err(config_err)?;
    let pipeline = match &c.pipeline {
        Some(p) => PipelineConfig::from_toml(&read(p)?).map_err(config_err)?,
        None => shipped::pipeline_config(),
    };
    preprocess(&raw, &pipeline, &load_registry(c)?).map_err(config_err)
}

fn make_backend(args: &BackendArgs) -> Result<Box<dyn CompletionBackend>, CliError> {
    if args.max_in_flight < 1 {
        return Err(CliError::Config("--max-in-flight must be at least 1".into()));
    }
    match args.backend {
        BackendArg::Mock => {
            let fixture = match &args.mock {
                Some(p) => MockFixture::from_json(&read(p)?).map_err(config_err)?,
                None => shipped::mock_fixture(),
            };
            Ok(Box::new(MockBackend::new(fixture)))
        }
        BackendArg::Live => {
            let mut config = match &args.llm_config {
                Some(p) => toml::from_str::<CompletionConfig>(&read(p)?).map_err(config_err)?,
                None => CompletionConfig::default(),
            };
            if let Some(endpoint) = &args.endpoint {
                config.endpoint = endpoint.clone();
            }
            if let Some(model) = &args.llm_model {
                config.model = model.clone();
            }
            config.max_in_flight = args.max_in_flight;
            Ok(Box::new(HttpBackend::new(config).map_err(config_err)?))
        }
    }
}
