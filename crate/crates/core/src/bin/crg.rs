//! Command-line front end: scoring runs, labeling runs, bare CRG
//! computations, reward batches, and imbalance simulations.
//!
//! Setting precedence is flags, then environment, then the optional TOML
//! config file. Every resolved value that shaped a scoring run is echoed
//! into the report metadata so the run can be reproduced from the report
//! alone. Output carries no timestamps: identical inputs produce
//! byte-identical output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crg_core::confusion::{align_corpora, confusion_from_labels, AlignMode, ConfusionCounts};
use crg_core::crg::{crg_hierarchical_from_counts, derive_weights, HierarchicalCrgResult};
use crg_core::error::{Error, Result};
use crg_core::io;
use crg_core::labeler::{label_corpus_llm, rule_label, ExtractorConfig, HttpTransport};
use crg_core::nlg::NlgConfig;
use crg_core::pipeline::{pair_reports, run_score, run_simulate, ScoreRequest};
use crg_core::report;
use crg_core::reward::{
    batch_crg_frozen, batch_rewards, FluencyMetric, RewardConfig, SampleRewardRecord,
};
use crg_core::schema::LabelMatrix;
use crg_core::simulate::{Predictor, SimulationSpec};

const TOKEN_ENV: &str = "CRG_LLM_TOKEN";
const CACHE_ENV: &str = "CRG_CACHE_DIR";

#[derive(Parser)]
#[command(
    name = "crg",
    version,
    about = "Distribution-aware scoring for generated clinical reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full evaluation report from text corpora, label matrices, or counts
    Score(ScoreArgs),
    /// Label a report corpus with rules or a hosted extraction model
    Label(LabelArgs),
    /// CRG alone, from label matrices or count files
    Crg(CrgArgs),
    /// Per-sample rewards under frozen corpus weights
    Reward(RewardArgs),
    /// Seeded simulation of metric behavior under class imbalance
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    /// Human-readable table
    Table,
    /// Machine-readable JSON
    Structured,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

/// Flags shared by every subcommand's output stage.
#[derive(Args)]
struct OutputArgs {
    /// table for humans, structured for machines
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Write output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML settings file; flags beat environment beats file
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Candidate (generated) report corpus, JSONL
    #[arg(long)]
    candidates: Option<PathBuf>,
    /// Reference report corpus, JSONL
    #[arg(long)]
    references: Option<PathBuf>,
    /// Predicted label matrix; repeat once per schema level
    #[arg(long = "labels-pred")]
    labels_pred: Vec<PathBuf>,
    /// Reference label matrix; paired with --labels-pred by position
    #[arg(long = "labels-ref")]
    labels_ref: Vec<PathBuf>,
    /// Aggregate counts file; the k-th occurrence scores level k
    #[arg(long)]
    counts: Vec<PathBuf>,
    /// Label schema JSON
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Rule file for labeling raw text
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Schema level the rule labeler targets
    #[arg(long)]
    level: Option<usize>,
    /// Refuse any sample-id mismatch (default)
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Drop unmatched samples with a warning instead of failing
    #[arg(long)]
    lenient: bool,
    /// Surface metrics; defaults to on when both text corpora are given
    #[arg(long, value_enum)]
    nlg: Option<Toggle>,
    /// Score levels past the first only where the parent finding is
    /// reference-positive at level 1
    #[arg(long)]
    conditional_levels: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct LabelArgs {
    /// Report corpus to label, JSONL
    #[arg(long)]
    reports: PathBuf,
    /// Label schema JSON
    #[arg(long)]
    schema: PathBuf,
    /// Rule file; rule mode runs when no endpoint is configured
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Schema level to label
    #[arg(long)]
    level: Option<usize>,
    /// Extraction endpoint URL; switches to model mode
    #[arg(long = "llm-endpoint")]
    llm_endpoint: Option<String>,
    /// Model name sent to the endpoint
    #[arg(long = "llm-model")]
    llm_model: Option<String>,
    /// Prompt template file containing {report} and {schema}
    #[arg(long = "prompt-file")]
    prompt_file: Option<PathBuf>,
    /// Attempts after the first on retryable failures
    #[arg(long = "max-retries")]
    max_retries: Option<u32>,
    #[arg(long = "timeout-secs")]
    timeout_secs: Option<u64>,
    /// Response cache directory (or CRG_CACHE_DIR)
    #[arg(long = "cache-dir")]
    cache_dir: Option<PathBuf>,
    /// Parallel requests in model mode
    #[arg(long = "max-in-flight")]
    max_in_flight: Option<usize>,
    /// Write the matrix here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML settings file; flags beat environment beats file
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CrgArgs {
    /// Predicted label matrix; repeat once per schema level
    #[arg(long = "labels-pred")]
    labels_pred: Vec<PathBuf>,
    /// Reference label matrix; paired with --labels-pred by position
    #[arg(long = "labels-ref")]
    labels_ref: Vec<PathBuf>,
    /// Aggregate counts file; the k-th occurrence scores level k
    #[arg(long)]
    counts: Vec<PathBuf>,
    /// Optional schema for matrix validation
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Refuse any sample-id mismatch (default)
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Drop unmatched samples with a warning instead of failing
    #[arg(long)]
    lenient: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum FluencyArg {
    Bleu4,
    RougeL,
    None,
}

impl From<FluencyArg> for FluencyMetric {
    fn from(value: FluencyArg) -> Self {
        match value {
            FluencyArg::Bleu4 => FluencyMetric::Bleu4,
            FluencyArg::RougeL => FluencyMetric::RougeL,
            FluencyArg::None => FluencyMetric::None,
        }
    }
}

#[derive(Args)]
struct RewardArgs {
    /// Predicted label matrix
    #[arg(long = "labels-pred")]
    labels_pred: PathBuf,
    /// Reference label matrix
    #[arg(long = "labels-ref")]
    labels_ref: PathBuf,
    /// Frozen corpus weights JSON
    #[arg(long, conflicts_with = "weights_from_counts")]
    weights: Option<PathBuf>,
    /// Derive the frozen weights from this counts file instead
    #[arg(long = "weights-from-counts")]
    weights_from_counts: Option<PathBuf>,
    /// Share of the label reward in the blend; used when a fluency
    /// metric is active
    #[arg(long)]
    lambda: Option<f64>,
    /// Fluency term mixed into the reward
    #[arg(long, value_enum)]
    fluency: Option<FluencyArg>,
    /// Candidate report corpus for the fluency term
    #[arg(long)]
    candidates: Option<PathBuf>,
    /// Reference report corpus for the fluency term
    #[arg(long)]
    references: Option<PathBuf>,
    /// Also compute the frozen-weight score of the whole batch
    #[arg(long)]
    batch: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum PredictorArg {
    AlwaysNegative,
    AlwaysPositive,
    Noisy,
}

#[derive(Args)]
struct SimulateArgs {
    /// Rows in the synthetic reference matrix
    #[arg(long)]
    samples: u64,
    /// Columns in the synthetic reference matrix
    #[arg(long)]
    labels: u64,
    /// Reference positive rate, strictly inside (0, 1); repeat for a sweep
    #[arg(long, required = true)]
    prevalence: Vec<f64>,
    #[arg(long, value_enum)]
    predictor: PredictorArg,
    /// Noisy predictor: P(positive | reference positive)
    #[arg(long)]
    sensitivity: Option<f64>,
    /// Noisy predictor: P(negative | reference negative)
    #[arg(long)]
    specificity: Option<f64>,
    /// Base seed; the i-th prevalence runs with seed + i
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

/// Optional TOML settings, the lowest precedence tier. Unknown keys are
/// rejected so typos fail loudly instead of silently using defaults.
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    level: Option<usize>,
    align: Option<String>,
    nlg: Option<String>,
    format: Option<String>,
    lambda: Option<f64>,
    seed: Option<u64>,
    llm_endpoint: Option<String>,
    llm_model: Option<String>,
    prompt_file: Option<String>,
    cache_dir: Option<String>,
    max_retries: Option<u32>,
    timeout_secs: Option<u64>,
    max_in_flight: Option<usize>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|cause| Error::Io {
        path: path.to_path_buf(),
        cause,
    })?;
    toml::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn resolve_align(strict: bool, lenient: bool, file: Option<&str>) -> Result<AlignMode> {
    if strict {
        return Ok(AlignMode::Strict);
    }
    if lenient {
        return Ok(AlignMode::Lenient);
    }
    match file {
        None | Some("strict") => Ok(AlignMode::Strict),
        Some("lenient") => Ok(AlignMode::Lenient),
        Some(other) => Err(Error::InvalidInput(format!(
            "config align must be strict or lenient, got {other}"
        ))),
    }
}

fn resolve_format(flag: Option<OutputFormat>, file: Option<&str>) -> Result<OutputFormat> {
    if let Some(format) = flag {
        return Ok(format);
    }
    match file {
        None | Some("table") => Ok(OutputFormat::Table),
        Some("structured") => Ok(OutputFormat::Structured),
        Some(other) => Err(Error::InvalidInput(format!(
            "config format must be table or structured, got {other}"
        ))),
    }
}

fn resolve_nlg(flag: Option<Toggle>, file: Option<&str>, auto: bool) -> Result<bool> {
    if let Some(toggle) = flag {
        return Ok(toggle == Toggle::On);
    }
    match file {
        None => Ok(auto),
        Some("on") => Ok(true),
        Some("off") => Ok(false),
        Some(other) => Err(Error::InvalidInput(format!(
            "config nlg must be on or off, got {other}"
        ))),
    }
}

fn align_name(mode: AlignMode) -> &'static str {
    match mode {
        AlignMode::Strict => "strict",
        AlignMode::Lenient => "lenient",
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    let text = if content.ends_with('\n') {
        content.to_string()
    } else {
        format!("{content}\n")
    };
    match out {
        Some(path) => std::fs::write(path, text).map_err(|cause| Error::Io {
            path: path.to_path_buf(),
            cause,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_count_levels(paths: &[PathBuf]) -> Result<Vec<(usize, ConfusionCounts)>> {
    paths
        .iter()
        .enumerate()
        .map(|(i, path)| Ok((i + 1, io::load_counts(path)?)))
        .collect()
}

fn load_matrix_pairs(
    pred_paths: &[PathBuf],
    ref_paths: &[PathBuf],
) -> Result<Vec<(LabelMatrix, LabelMatrix)>> {
    if pred_paths.len() != ref_paths.len() {
        return Err(Error::InvalidInput(format!(
            "{} --labels-pred file(s) but {} --labels-ref file(s); they pair by position",
            pred_paths.len(),
            ref_paths.len()
        )));
    }
    pred_paths
        .iter()
        .zip(ref_paths)
        .map(|(p, r)| Ok((io::load_label_matrix(p)?, io::load_label_matrix(r)?)))
        .collect()
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let file = load_file_config(args.output.config.as_deref())?;
    let mut request = ScoreRequest::new();
    let mut echo = BTreeMap::new();

    request.level = args.level.or(file.level).unwrap_or(1);
    request.align_mode = resolve_align(args.strict, args.lenient, file.align.as_deref())?;
    request.conditional_deeper_levels = args.conditional_levels;

    if let Some(path) = &args.candidates {
        request.candidates_text = Some(io::load_report_corpus(path)?);
        echo.insert("candidates".to_string(), path.display().to_string());
    }
    if let Some(path) = &args.references {
        request.references_text = Some(io::load_report_corpus(path)?);
        echo.insert("references".to_string(), path.display().to_string());
    }
    request.label_pairs = load_matrix_pairs(&args.labels_pred, &args.labels_ref)?;
    if !args.labels_pred.is_empty() {
        echo.insert("labels_pred".to_string(), join_paths(&args.labels_pred));
        echo.insert("labels_ref".to_string(), join_paths(&args.labels_ref));
    }
    request.counts = load_count_levels(&args.counts)?;
    if !args.counts.is_empty() {
        echo.insert("counts".to_string(), join_paths(&args.counts));
    }
    if let Some(path) = &args.schema {
        request.schema = Some(io::load_schema(path)?);
        echo.insert("schema".to_string(), path.display().to_string());
    }
    if let Some(path) = &args.rules {
        request.rules = Some(io::load_rules(path)?);
        echo.insert("rules".to_string(), path.display().to_string());
    }
    if let Some(path) = &args.output.config {
        echo.insert("config_file".to_string(), path.display().to_string());
    }

    let auto_nlg = request.candidates_text.is_some() && request.references_text.is_some();
    request.nlg_enabled = resolve_nlg(args.nlg, file.nlg.as_deref(), auto_nlg)?;

    let format = resolve_format(args.output.format, file.format.as_deref())?;
    echo.insert("level".to_string(), request.level.to_string());
    echo.insert(
        "align".to_string(),
        align_name(request.align_mode).to_string(),
    );
    echo.insert(
        "nlg".to_string(),
        if request.nlg_enabled { "on" } else { "off" }.to_string(),
    );
    echo.insert(
        "conditional_levels".to_string(),
        request.conditional_deeper_levels.to_string(),
    );
    echo.insert(
        "format".to_string(),
        match format {
            OutputFormat::Table => "table",
            OutputFormat::Structured => "structured",
        }
        .to_string(),
    );
    request.resolved_config = echo;

    let evaluation = run_score(&request)?;
    let content = match format {
        OutputFormat::Table => report::render_table(&evaluation),
        OutputFormat::Structured => report::to_json(&evaluation),
    };
    emit(args.output.out.as_deref(), &content)
}

fn join_paths(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn cmd_label(args: LabelArgs) -> Result<()> {
    let file = load_file_config(args.config.as_deref())?;
    let level = args.level.or(file.level).unwrap_or(1);
    let schema = io::load_schema(&args.schema)?;
    let records = io::load_report_corpus(&args.reports)?;

    let endpoint = args.llm_endpoint.or(file.llm_endpoint);
    let model = args.llm_model.or(file.llm_model);
    let matrix = match (endpoint, model) {
        (Some(endpoint), Some(model_name)) => {
            let prompt_path = args
                .prompt_file
                .or(file.prompt_file.map(PathBuf::from))
                .ok_or_else(|| {
                    Error::InvalidInput(
                        "model mode needs --prompt-file (template with {report} and {schema})"
                            .to_string(),
                    )
                })?;
            let prompt_template =
                std::fs::read_to_string(&prompt_path).map_err(|cause| Error::Io {
                    path: prompt_path.clone(),
                    cause,
                })?;
            let cache_path = args
                .cache_dir
                .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
                .or(file.cache_dir.map(PathBuf::from));
            let config = ExtractorConfig {
                endpoint,
                model_name,
                prompt_template,
                max_retries: args.max_retries.or(file.max_retries).unwrap_or(2),
                timeout_secs: args.timeout_secs.or(file.timeout_secs).unwrap_or(30),
                cache_path,
                auth_token: std::env::var(TOKEN_ENV).ok(),
            };
            let reports: Vec<(String, String)> = records
                .iter()
                .map(|r| (r.sample_id.clone(), r.text.clone()))
                .collect();
            let in_flight = args.max_in_flight.or(file.max_in_flight).unwrap_or(4);
            let outcomes =
                label_corpus_llm(&reports, &schema, level, &config, &HttpTransport, in_flight)?;
            LabelMatrix::new(level, outcomes.into_iter().map(|o| o.assignment).collect())?
        }
        (None, None) => {
            let rules_path = args.rules.ok_or_else(|| {
                Error::InvalidInput(
                    "rule mode needs --rules; model mode needs --llm-endpoint and --llm-model"
                        .to_string(),
                )
            })?;
            let rules = io::load_rules(&rules_path)?;
            let rows = records
                .iter()
                .map(|r| rule_label(&r.text, &rules, &schema, level, &r.sample_id))
                .collect::<Result<Vec<_>>>()?;
            LabelMatrix::new(level, rows)?
        }
        _ => {
            return Err(Error::InvalidInput(
                "model mode needs both --llm-endpoint and --llm-model".to_string(),
            ))
        }
    };
    emit(args.out.as_deref(), &io::matrix_to_jsonl(&matrix))
}

fn cmd_crg(args: CrgArgs) -> Result<()> {
    let file = load_file_config(args.output.config.as_deref())?;
    let mode = resolve_align(args.strict, args.lenient, file.align.as_deref())?;

    let level_counts = if !args.counts.is_empty() {
        load_count_levels(&args.counts)?
    } else {
        let pairs = load_matrix_pairs(&args.labels_pred, &args.labels_ref)?;
        if pairs.is_empty() {
            return Err(Error::InvalidInput(
                "provide --counts files or --labels-pred/--labels-ref matrices".to_string(),
            ));
        }
        let schema = args.schema.as_deref().map(io::load_schema).transpose()?;
        let mut levels = Vec::with_capacity(pairs.len());
        for (predictions, references) in &pairs {
            if let Some(schema) = &schema {
                predictions.conforms_to(schema)?;
                references.conforms_to(schema)?;
            }
            let paired = align_corpora(predictions, references, mode)?;
            let breakdown = confusion_from_labels(&paired)?;
            levels.push((references.schema_level(), breakdown.aggregate));
        }
        levels
    };

    let result = crg_hierarchical_from_counts(&level_counts)?;
    let format = resolve_format(args.output.format, file.format.as_deref())?;
    let content = match format {
        OutputFormat::Table => render_crg_table(&result),
        OutputFormat::Structured => io::pretty_json(&result),
    };
    emit(args.output.out.as_deref(), &content)
}

fn render_crg_table(result: &HierarchicalCrgResult) -> String {
    let mut out = String::new();
    for (level, level_result) in result.levels.iter().zip(&result.per_level) {
        out.push_str(&format!(
            "crg level {level}: {:.6}   (tp {}, fn {}, fp {}, tn {}; w_tp {:.6})\n",
            level_result.score,
            level_result.counts.tp,
            level_result.counts.fn_,
            level_result.counts.fp,
            level_result.counts.tn,
            level_result.weights.w_tp,
        ));
    }
    out.push_str(&format!("crg final:   {:.6}\n", result.final_score));
    out
}

/// Reward run output: per-sample records plus the batch summary.
#[derive(serde::Serialize)]
struct RewardOutput {
    records: Vec<SampleRewardRecord>,
    mean_reward: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    batch_score: Option<f64>,
}

fn cmd_reward(args: RewardArgs) -> Result<()> {
    let file = load_file_config(args.output.config.as_deref())?;
    let predictions = io::load_label_matrix(&args.labels_pred)?;
    let references = io::load_label_matrix(&args.labels_ref)?;

    let weights = match (&args.weights, &args.weights_from_counts) {
        (Some(path), None) => io::load_weights(path)?,
        (None, Some(path)) => {
            let counts = io::load_counts(path)?;
            derive_weights(counts.total(), counts.positives())?
        }
        (None, None) => {
            return Err(Error::InvalidInput(
                "provide --weights or --weights-from-counts".to_string(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };

    let fluency_metric: FluencyMetric = args.fluency.map(Into::into).unwrap_or_default();
    let config = RewardConfig {
        weights,
        blend_lambda: args.lambda.or(file.lambda).unwrap_or(0.5),
        fluency_metric,
    };
    let fluency_pairs = if fluency_metric != FluencyMetric::None {
        let (Some(cands), Some(refs)) = (&args.candidates, &args.references) else {
            return Err(Error::InvalidInput(
                "a fluency metric needs --candidates and --references text corpora".to_string(),
            ));
        };
        Some(pair_reports(
            &io::load_report_corpus(cands)?,
            &io::load_report_corpus(refs)?,
            AlignMode::Strict,
        )?)
    } else {
        None
    };

    let records = batch_rewards(
        &predictions,
        &references,
        &config,
        fluency_pairs.as_deref(),
        &NlgConfig::default(),
    )?;
    let mean_reward = records.iter().map(|r| r.reward).sum::<f64>() / records.len() as f64;
    let batch_score = args
        .batch
        .then(|| batch_crg_frozen(&predictions, &references, &weights))
        .transpose()?;
    let output = RewardOutput {
        records,
        mean_reward,
        batch_score,
    };

    let format = resolve_format(args.output.format, file.format.as_deref())?;
    let content = match format {
        OutputFormat::Table => render_reward_table(&output),
        OutputFormat::Structured => io::pretty_json(&output),
    };
    emit(args.output.out.as_deref(), &content)
}

fn render_reward_table(output: &RewardOutput) -> String {
    let mut out = String::new();
    for record in &output.records {
        out.push_str(&format!(
            "{}: label {:.6}",
            record.sample_id, record.label_reward
        ));
        if let Some(fluency) = record.fluency {
            out.push_str(&format!(", fluency {fluency:.6}"));
        }
        out.push_str(&format!(", reward {:.6}\n", record.reward));
    }
    out.push_str(&format!("mean reward: {:.6}\n", output.mean_reward));
    if let Some(batch) = output.batch_score {
        out.push_str(&format!("batch score (frozen weights): {batch:.6}\n"));
    }
    out
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let file = load_file_config(args.output.config.as_deref())?;
    let seed = args.seed.or(file.seed).unwrap_or(0);

    let predictor = match args.predictor {
        PredictorArg::AlwaysNegative | PredictorArg::AlwaysPositive
            if args.sensitivity.is_some() || args.specificity.is_some() =>
        {
            return Err(Error::InvalidInput(
                "--sensitivity/--specificity apply only to the noisy predictor".to_string(),
            ))
        }
        PredictorArg::AlwaysNegative => Predictor::AlwaysNegative,
        PredictorArg::AlwaysPositive => Predictor::AlwaysPositive,
        PredictorArg::Noisy => {
            let (Some(sensitivity), Some(specificity)) = (args.sensitivity, args.specificity)
            else {
                return Err(Error::InvalidInput(
                    "the noisy predictor needs --sensitivity and --specificity".to_string(),
                ));
            };
            Predictor::Noisy {
                sensitivity,
                specificity,
            }
        }
    };

    let specs: Vec<SimulationSpec> = args
        .prevalence
        .iter()
        .enumerate()
        .map(|(i, &prevalence)| SimulationSpec {
            n_samples: args.samples,
            n_labels: args.labels,
            prevalence,
            predictor,
            seed: seed + i as u64,
        })
        .collect();
    let rows = run_simulate(&specs)?;

    let format = resolve_format(args.output.format, file.format.as_deref())?;
    let content = match format {
        OutputFormat::Table => report::render_simulation_table(&rows),
        OutputFormat::Structured => report::simulation_to_json(&rows),
    };
    emit(args.output.out.as_deref(), &content)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Score(args) => cmd_score(args),
        Command::Label(args) => cmd_label(args),
        Command::Crg(args) => cmd_crg(args),
        Command::Reward(args) => cmd_reward(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // The whole cause chain: a wrapped error is useless without
            // the underlying reason.
            eprint!("error: {err}");
            let mut cause = std::error::Error::source(&err);
            while let Some(inner) = cause {
                eprint!(": {inner}");
                cause = inner.source();
            }
            eprintln!();
            ExitCode::FAILURE
        }
    }
}
