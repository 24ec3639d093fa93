//! Command-line front end: corpus ingestion, schedule training, generation,
//! detection, publisher classification and evaluation.
//!
//! Every command resolves one [`RunConfig`], writes `manifest.json` into the
//! output directory and stamps the config hash into each file it produces.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use pubstyle::checkpoint::{self, CheckpointError};
use pubstyle::config::{ConfigError, EmbedderKind, RunConfig};
use pubstyle::corpus::{self, CorpusError, Format, MANIFEST_KEY};
use pubstyle::discriminators::{DiscriminatorError, LabelIndex, StyleDiscriminator};
use pubstyle::eval::{
    self, classification_metrics, content_scores, fluency_scores, spelling_style_counts, style_adherence,
    DmStyleClassifier, Embedder, EvalError, HashingEmbedder, Lexicon, MeanTokenEmbedder, MetricInputs, Triple,
};
use pubstyle::generator::{self, machine_id, GeneratorConfig, GeneratorError, LanguageModel};
use pubstyle::schedule::{self, Artifacts, RunOptions, ScheduleError};
use pubstyle::{rng, toy, NewsRecord, Source, Split};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("manifest {path}: {message}")]
    Manifest { path: String, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Discriminator(#[from] DiscriminatorError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Stable code printed in the error line.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "E_CONFIG",
            CliError::Manifest { .. } => "E_MANIFEST",
            CliError::Corpus(_) => "E_CORPUS",
            CliError::Schedule(ScheduleError::CorruptCheckpoint { .. } | ScheduleError::SeedMismatch { .. }) => {
                "E_CHECKPOINT"
            }
            CliError::Schedule(_) => "E_TRAIN",
            CliError::Checkpoint(_) => "E_CHECKPOINT",
            CliError::Generator(_) => "E_GENERATE",
            CliError::Discriminator(_) => "E_DISCRIMINATOR",
            CliError::Eval(_) => "E_EVAL",
            CliError::Usage(_) => "E_USAGE",
            CliError::Io { .. } => "E_IO",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.code() {
            "E_USAGE" => 2,
            "E_CONFIG" | "E_MANIFEST" => 3,
            "E_CORPUS" => 4,
            "E_CHECKPOINT" => 5,
            "E_TRAIN" => 6,
            "E_GENERATE" | "E_DISCRIMINATOR" => 7,
            "E_EVAL" => 8,
            _ => 1,
        }
    }

    /// `error[CODE]: message: cause: cause`, on one line.
    pub fn one_line(&self) -> String {
        let mut msg = self.to_string();
        let mut cause = std::error::Error::source(self);
        while let Some(c) = cause {
            let text = c.to_string();
            if !msg.contains(&text) {
                msg.push_str(": ");
                msg.push_str(&text);
            }
            cause = c.source();
        }
        format!("error[{}]: {}", self.code(), msg.replace('\n', " "))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "pubstyle",
    version,
    about = "Publisher-conditioned news generation and detection"
)]
pub struct Cli {
    /// TOML run config; defaults to the bundled desk-scale settings.
    #[arg(long, global = true, conflicts_with = "from_manifest")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Reuse the config recorded in a `manifest.json` from an earlier command.
    #[arg(long, global = true)]
    pub from_manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus and write it as JSONL with dataset statistics.
    Ingest(IngestArgs),
    /// Run the adversarial training schedule, checkpointing every epoch.
    Train(TrainArgs),
    /// Generate articles from publisher and highlight pairs.
    Generate(GenerateArgs),
    /// Label articles as human-written or machine-generated.
    Detect(PredictArgs),
    /// Predict the publisher of each article.
    ClassifyPublisher(PredictArgs),
    /// Score machine articles against human ones.
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Tsv,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Corpus file; the bundled toy corpus when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Keep only the K most frequent publishers.
    #[arg(long)]
    pub top_publishers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSONL or TSV corpus; the bundled toy corpus when omitted.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Continue from `<out-dir>/checkpoint`.
    #[arg(long)]
    pub resume: bool,
    /// Stop after this outer epoch (the checkpoint is written first).
    #[arg(long)]
    pub stop_after_epoch: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Defaults to `<out-dir>/checkpoint`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Records supplying publisher and highlight; the toy TEST split when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Only use records of this split.
    #[arg(long)]
    pub split: Option<String>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Defaults to `<out-dir>/checkpoint`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Human reference articles.
    #[arg(long)]
    pub human: PathBuf,
    /// Machine articles; ids `<human id>::M` pair them with references.
    #[arg(long)]
    pub machine: PathBuf,
    /// Supplies the embedding table; without it hashed word vectors are used.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value = "corpus")]
    pub dataset: String,
    #[arg(long, default_value = "model")]
    pub model: String,
}

/// Written to `<out-dir>/manifest.json` by every command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub manifest_hash: String,
    pub config: RunConfig,
}

pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = if let Some(path) = &cli.from_manifest {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let bad = |message: String| CliError::Manifest {
            path: path.display().to_string(),
            message,
        };
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if m.config.manifest_hash() != m.manifest_hash {
            return Err(bad("recorded hash does not match the recorded config".into()));
        }
        m.config.validate()?;
        m.config
    } else if let Some(path) = &cli.config {
        RunConfig::load(path)?
    } else {
        RunConfig::desk_scale()
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Ingest(_) => "ingest",
        Command::Train(_) => "train",
        Command::Generate(_) => "generate",
        Command::Detect(_) => "detect",
        Command::ClassifyPublisher(_) => "classify-publisher",
        Command::Evaluate(_) => "evaluate",
    }
}

/// Runs one parsed invocation; returns the summary line printed on success.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let config = resolve_config(cli)?;
    let out = &cli.out_dir;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let manifest = RunManifest {
        command: command_name(&cli.command).into(),
        manifest_hash: config.manifest_hash(),
        config: config.clone(),
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    let ctx = Ctx {
        config: &config,
        hash: &manifest.manifest_hash,
        out,
    };
    match &cli.command {
        Command::Ingest(a) => ingest(&ctx, a),
        Command::Train(a) => train(&ctx, a),
        Command::Generate(a) => generate(&ctx, a),
        Command::Detect(a) => detect(&ctx, a),
        Command::ClassifyPublisher(a) => classify_publisher(&ctx, a),
        Command::Evaluate(a) => evaluate(&ctx, a),
    }
}

struct Ctx<'a> {
    config: &'a RunConfig,
    hash: &'a str,
    out: &'a Path,
}

impl Ctx<'_> {
    fn checkpoint(&self, given: &Option<PathBuf>) -> PathBuf {
        given.clone().unwrap_or_else(|| self.out.join("checkpoint"))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("value serialises");
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn write_jsonl<T: Serialize>(path: &Path, hash: &str, rows: &[T]) -> Result<(), CliError> {
    let mut text = serde_json::json!({ MANIFEST_KEY: hash }).to_string();
    text.push('\n');
    for r in rows {
        text.push_str(&serde_json::to_string(r).expect("row serialises"));
        text.push('\n');
    }
    fs::write(path, text).map_err(io_err(path))
}

fn infer_format(path: &Path, given: Option<FormatArg>) -> Format {
    match given {
        Some(FormatArg::Jsonl) => Format::Jsonl,
        Some(FormatArg::Tsv) => Format::Tsv,
        None if path.extension().is_some_and(|e| e == "tsv") => Format::Tsv,
        None => Format::Jsonl,
    }
}

pub fn load_records(path: Option<&Path>, format: Option<FormatArg>) -> Result<Vec<NewsRecord>, CliError> {
    match path {
        None => Ok(toy::corpus(0)),
        Some(p) => {
            fs::metadata(p).map_err(io_err(p))?;
            Ok(corpus::load_corpus(p, infer_format(p, format))?)
        }
    }
}

fn ingest(ctx: &Ctx, a: &IngestArgs) -> Result<String, CliError> {
    let mut records = load_records(a.input.as_deref(), a.format)?;
    if let Some(k) = a.top_publishers {
        records = corpus::filter_top_publishers(&records, k);
    }
    let stats = corpus::compute_stats(&records)?;
    let path = ctx.out.join("corpus.jsonl");
    corpus::save_corpus(&path, &records, Some(ctx.hash)).map_err(io_err(&path))?;
    write_json(
        &ctx.out.join("stats.json"),
        &serde_json::json!({ "manifest_hash": ctx.hash, "stats": stats }),
    )?;
    Ok(format!(
        "ingested {} records from {} publishers into {}",
        stats.total,
        stats.publisher_classes,
        path.display()
    ))
}

fn train(ctx: &Ctx, a: &TrainArgs) -> Result<String, CliError> {
    let checkpoint_dir = ctx.out.join("checkpoint");
    let options = RunOptions {
        checkpoint_dir: Some(checkpoint_dir.clone()),
        stop_after_epoch: a.stop_after_epoch,
        observer: None,
    };
    let sc = ctx.config.schedule_config();
    let outcome = if a.resume {
        schedule::resume_schedule(&checkpoint_dir, Some(&sc), options)?
    } else {
        let records = load_records(a.corpus.as_deref(), None)?;
        schedule::run_schedule(&records, &sc, options)?
    };
    let trace_path = ctx.out.join("trace.jsonl");
    fs::write(&trace_path, outcome.trace.to_jsonl()).map_err(io_err(&trace_path))?;
    write_jsonl(&ctx.out.join("synthetic.jsonl"), ctx.hash, &outcome.machine)?;
    let last = outcome.trace.epochs.last();
    Ok(format!(
        "{} after {} of {} epochs; generator loss {:.4}, source loss {:.4}; checkpoint {}",
        if outcome.complete { "trained" } else { "stopped" },
        outcome.trace.epochs.len(),
        sc.schedule.epochs_source,
        last.map_or(f64::NAN, |e| e.generator_loss),
        last.map_or(f64::NAN, |e| e.source_loss),
        checkpoint_dir.display()
    ))
}

fn load(ctx: &Ctx, given: &Option<PathBuf>) -> Result<Artifacts, CliError> {
    let dir = ctx.checkpoint(given);
    if !dir.is_dir() {
        return Err(CliError::Usage(format!(
            "checkpoint directory {} does not exist; run `train` first or pass --checkpoint",
            dir.display()
        )));
    }
    Ok(schedule::load_artifacts(&dir)?)
}

/// Seed for generation outside the schedule, derived from the master seed.
pub fn generation_config(config: &RunConfig) -> GeneratorConfig {
    GeneratorConfig {
        seed: rng::derive_seed(config.seed, &[rng::tag("cli_generate")]),
        ..config.generator.clone()
    }
}

fn generate(ctx: &Ctx, a: &GenerateArgs) -> Result<String, CliError> {
    let art = load(ctx, &a.checkpoint)?;
    let mut records = load_records(a.input.as_deref(), None)?;
    let split = match (&a.split, &a.input) {
        (Some(s), _) => Some(s.parse::<Split>().map_err(CliError::Usage)?),
        (None, None) => Some(Split::Test),
        (None, Some(_)) => None,
    };
    if let Some(s) = split {
        records.retain(|r| r.split == s);
    }
    records.retain(|r| r.source != Source::Machine);
    if records.is_empty() {
        return Err(CliError::Usage("no input records to condition on".into()));
    }
    let refs: Vec<&NewsRecord> = records.iter().collect();
    let batch = generator::batch_generate(&art.generator, &refs, &generation_config(ctx.config));
    if let Some(f) = batch.failures.first() {
        return Err(CliError::Usage(format!(
            "{} of {} records failed to generate, first {}: {}",
            batch.failures.len(),
            records.len(),
            f.id,
            f.error
        )));
    }
    let path = ctx.out.join("generated.jsonl");
    write_jsonl(&path, ctx.hash, &batch.records)?;
    Ok(format!(
        "generated {} articles ({} empty) into {}",
        batch.records.len(),
        batch.degenerate.len(),
        path.display()
    ))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Detection {
    pub id: String,
    pub predicted: Source,
    pub probability: f64,
    pub gold: Option<Source>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PublisherPrediction {
    pub id: String,
    pub predicted: String,
    pub probabilities: BTreeMap<String, f64>,
    pub gold: Option<String>,
}

fn detect(ctx: &Ctx, a: &PredictArgs) -> Result<String, CliError> {
    let art = load(ctx, &a.checkpoint)?;
    let records = load_records(Some(&a.input), None)?;
    let vocab = art.generator.vocab();
    let mut rows = Vec::with_capacity(records.len());
    for r in &records {
        let (predicted, probability) = art.discriminators.detect_source(&vocab.encode_content(&r.content))?;
        let gold = (r.source != Source::Unknown).then_some(r.source);
        rows.push(Detection {
            id: r.id.clone(),
            predicted,
            probability,
            gold,
        });
    }
    write_jsonl(&ctx.out.join("detections.jsonl"), ctx.hash, &rows)?;
    let labelled: Vec<&Detection> = rows.iter().filter(|d| d.gold.is_some()).collect();
    let mut summary = format!("labelled {} articles", rows.len());
    if !labelled.is_empty() {
        let pred: Vec<Source> = labelled.iter().map(|d| d.predicted).collect();
        let gold: Vec<Source> = labelled.iter().map(|d| d.gold.expect("filtered")).collect();
        let m = classification_metrics(&pred, &gold)?;
        let inputs = MetricInputs {
            classification: Some(m),
            ..MetricInputs::default()
        };
        let report = eval::build_report(&dataset_name(&a.input), "d_source", &inputs, Some(ctx.hash))?;
        eval::write_report(&report, ctx.out)?;
        summary.push_str(&format!(
            "; {} with gold labels: accuracy {:.4}, macro F1 {:.4}",
            labelled.len(),
            m.accuracy,
            m.macro_f1
        ));
    }
    Ok(summary)
}

fn classify_publisher(ctx: &Ctx, a: &PredictArgs) -> Result<String, CliError> {
    let art = load(ctx, &a.checkpoint)?;
    let records = load_records(Some(&a.input), None)?;
    let vocab = art.generator.vocab();
    let labels = art.discriminators.labels().clone();
    let mut rows = Vec::with_capacity(records.len());
    for r in &records {
        let (predicted, probs) = art
            .discriminators
            .classify_publisher(&vocab.encode_content(&r.content))?;
        let probabilities = labels.names().iter().cloned().zip(probs).collect();
        let gold = (!r.publisher.is_empty()).then(|| r.publisher.clone());
        rows.push(PublisherPrediction {
            id: r.id.clone(),
            predicted,
            probabilities,
            gold,
        });
    }
    write_jsonl(&ctx.out.join("publishers.jsonl"), ctx.hash, &rows)?;
    let labelled: Vec<&PublisherPrediction> = rows.iter().filter(|p| p.gold.is_some()).collect();
    let mut summary = format!("classified {} articles", rows.len());
    if !labelled.is_empty() {
        let pred: Vec<&str> = labelled.iter().map(|p| p.predicted.as_str()).collect();
        let gold: Vec<&str> = labelled.iter().map(|p| p.gold.as_deref().expect("filtered")).collect();
        let m = classification_metrics(&pred, &gold)?;
        let inputs = MetricInputs {
            classification: Some(m),
            ..MetricInputs::default()
        };
        let report = eval::build_report(&dataset_name(&a.input), "d_style", &inputs, Some(ctx.hash))?;
        eval::write_report(&report, ctx.out)?;
        summary.push_str(&format!(
            "; {} with gold publishers: accuracy {:.4}, macro F1 {:.4}",
            labelled.len(),
            m.accuracy,
            m.macro_f1
        ));
    }
    Ok(summary)
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "input".into(), |s| s.to_string_lossy().into_owned())
}

fn evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<String, CliError> {
    let human = load_records(Some(&a.human), None)?;
    let machine = load_records(Some(&a.machine), None)?;
    let metrics = &ctx.config.metrics;
    let art = a.checkpoint.as_ref().map(|_| load(ctx, &a.checkpoint)).transpose()?;

    let embedder: Box<dyn Embedder> = match (&art, metrics.embedder) {
        (Some(art), EmbedderKind::MeanToken) => Box::new(MeanTokenEmbedder::new(
            art.generator.vocab().clone(),
            Arc::new(art.generator.embedding_table()),
        )),
        _ => Box::new(HashingEmbedder::new(
            metrics.hashing_width,
            rng::derive_seed(ctx.config.seed, &[rng::tag("hashing_embedder")]),
        )),
    };

    let human_texts: Vec<&str> = human.iter().map(|r| r.content.as_str()).collect();
    let machine_texts: Vec<&str> = machine.iter().map(|r| r.content.as_str()).collect();
    let fluency = fluency_scores(&human_texts, &machine_texts, embedder.as_ref(), &metrics.fluency)?;

    let by_id: BTreeMap<String, &NewsRecord> = human.iter().map(|r| (machine_id(&r.id), r)).collect();
    let triples: Vec<Triple> = machine
        .iter()
        .filter_map(|m| {
            by_id.get(&m.id).map(|h| Triple {
                prompt: h.highlight.clone(),
                generated: m.content.clone(),
                reference: h.content.clone(),
            })
        })
        .collect();
    let content = (!triples.is_empty())
        .then(|| content_scores(&triples, embedder.as_ref()))
        .transpose()?;

    // Publisher classifier for style adherence, trained on human text only.
    let train: Vec<NewsRecord> = human
        .iter()
        .filter(|r| r.split == Split::Train && !r.publisher.is_empty())
        .cloned()
        .collect();
    let style = if train.is_empty() {
        None
    } else {
        let (vocab, table) = match &art {
            Some(art) => (art.generator.vocab().clone(), Arc::new(art.generator.embedding_table())),
            None => {
                let vocab = schedule::build_vocab(&train);
                let lm = generator::TinyLm::new(
                    vocab.clone(),
                    ctx.config.model.clone(),
                    rng::derive_seed(ctx.config.seed, &[rng::tag("eval_table")]),
                );
                (vocab, Arc::new(lm.embedding_table()))
            }
        };
        let mut dm = ctx.config.dm.clone();
        // A freshly initialised table carries no information when frozen.
        if art.is_none() {
            dm.frozen_embeddings = false;
        }
        let mut disc = StyleDiscriminator::new(
            table,
            LabelIndex::from_records(&train),
            &dm,
            rng::derive_seed(ctx.config.seed, &[rng::tag("eval_style")]),
        );
        disc.train(
            &train,
            &vocab,
            metrics.style_classifier_epochs,
            &dm,
            rng::derive_seed(ctx.config.seed, &[rng::tag("eval_style_train")]),
        )?;
        let classifier = DmStyleClassifier {
            discriminator: disc,
            vocab,
            trained: true,
        };
        let known: Vec<NewsRecord> = machine
            .iter()
            .filter(|r| classifier.discriminator.labels.index(&r.publisher).is_some())
            .cloned()
            .collect();
        (!known.is_empty())
            .then(|| style_adherence(&known, &classifier))
            .transpose()?
    };

    let lexicon = Lexicon::bundled();
    let mut spelling = BTreeMap::new();
    let mut publishers: Vec<&str> = machine.iter().map(|r| r.publisher.as_str()).collect();
    publishers.sort_unstable();
    publishers.dedup();
    for p in publishers {
        let texts: Vec<&str> = machine
            .iter()
            .filter(|r| r.publisher == p)
            .map(|r| r.content.as_str())
            .collect();
        spelling.insert(p.to_string(), spelling_style_counts(&texts, &lexicon));
    }

    let inputs = MetricInputs {
        fluency: Some(fluency),
        content,
        style,
        classification: None,
        spelling: Some(spelling),
    };
    let report = eval::build_report(&a.dataset, &a.model, &inputs, Some(ctx.hash))?;
    eval::write_report(&report, ctx.out)?;
    Ok(format!(
        "mauve {:.4}, frontier {:.4}, bleu {}, style F1 {}; report in {}",
        fluency.mauve,
        fluency.frontier,
        report.bleu.map_or("absent".into(), |b| format!("{b:.2}")),
        report.style_f1.map_or("absent".into(), |f| format!("{f:.4}")),
        ctx.out.join("report.json").display()
    ))
}

/// Reads a checkpoint-stamped JSONL output back, skipping the manifest line.
pub fn read_output<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(Option<String>, Vec<T>), CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut hash = None;
    let mut rows = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| CliError::Usage(e.to_string()))?;
        if let Some(h) = value.get(MANIFEST_KEY) {
            hash = h.as_str().map(str::to_string);
            continue;
        }
        rows.push(serde_json::from_value(value).map_err(|e| CliError::Usage(e.to_string()))?);
    }
    Ok((hash, rows))
}

/// SHA-256 of every file under `dir`, keyed by relative path.
pub fn checkpoint_digest(dir: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(io_err(&d))? {
            let path = entry.map_err(io_err(&d))?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = fs::read(&path).map_err(io_err(&path))?;
                let rel = path.strip_prefix(dir).expect("inside dir").display().to_string();
                out.insert(rel, checkpoint::sha256_hex(&bytes));
            }
        }
    }
    Ok(out)
}
