//! The alternating training loop: per outer epoch, fine-tune the generator on
//! the unsampled human group, train the style discriminator (human text in
//! epoch 1, the previous epoch's synthetic text afterwards), generate
//! synthetic news from the sampled group, then train the source
//! discriminator on human plus synthetic text.
//!
//! The models are coupled only through data; no gradient flows from a
//! discriminator into the generator.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::checkpoint::{self, CheckpointError};
use crate::corpus::{self, CorpusError, CorpusSplit, NewsRecord, Source, Split};
use crate::discriminators::{DiscriminatorError, Discriminators, DmConfig, LabelIndex};
use crate::generator::{self, GeneratorConfig, GeneratorError, GeneratorTrainer, LanguageModel, LmConfig, TinyLm};
use crate::prompting::{self, PromptError};
use crate::rng;
use crate::vocab::{SpecialTokens, Vocab};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleSettings {
    /// Inner epochs of style-discriminator training per outer epoch.
    pub epochs_style: usize,
    /// Outer epochs.
    pub epochs_source: usize,
    /// Fraction of human training news in the sampled (prompt) group.
    pub split_ratio: f64,
    /// Train the source discriminator on all human training news rather than
    /// only the sampled group.
    pub source_uses_full_human: bool,
    /// Keep earlier epochs' synthetic news for source training.
    pub accumulate_machine: bool,
    /// Passes over the source training set per outer epoch.
    pub source_passes: usize,
}

impl Default for ScheduleSettings {
    fn default() -> Self {
        Self {
            epochs_style: 10,
            epochs_source: 5,
            split_ratio: 0.5,
            source_uses_full_human: true,
            accumulate_machine: false,
            source_passes: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub seed: u64,
    pub schedule: ScheduleSettings,
    pub generator: GeneratorConfig,
    pub model: LmConfig,
    pub dm: DmConfig,
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        let bad = |m: String| Err(ScheduleError::ConfigInvalid(m));
        let s = &self.schedule;
        if s.epochs_style == 0 {
            return bad("schedule.epochs_style must be >= 1".into());
        }
        if s.epochs_source == 0 {
            return bad("schedule.epochs_source must be >= 1".into());
        }
        if !(s.split_ratio > 0.0 && s.split_ratio < 1.0) {
            return bad("schedule.split_ratio must lie in (0, 1)".into());
        }
        if s.source_passes == 0 {
            return bad("schedule.source_passes must be >= 1".into());
        }
        if self.model.embedding_width == 0 || self.model.hidden_width == 0 {
            return bad("model widths must be >= 1".into());
        }
        self.generator
            .validate()
            .map_err(|e| ScheduleError::ConfigInvalid(e.to_string()))?;
        self.dm.validate().map_err(ScheduleError::ConfigInvalid)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn manifest_hash(&self) -> String {
        checkpoint::sha256_hex(serde_json::to_string(self).expect("config serialises").as_bytes())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    FineTuneGenerator,
    TrainStyle,
    Generate,
    TrainSource,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::FineTuneGenerator => "fine_tune_generator",
            Phase::TrainStyle => "train_style",
            Phase::Generate => "generate",
            Phase::TrainSource => "train_source",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DataSource {
    Human,
    Synthetic,
    Mixed,
}

/// One completed phase. `seq` is a logical clock, strictly increasing over
/// the whole run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseEvent {
    pub seq: u64,
    pub epoch: usize,
    pub phase: Phase,
    pub data: DataSource,
    /// Records consumed (training phases) or produced (generation).
    pub records: usize,
    /// SHA-256 over the sorted record ids.
    pub ids_digest: String,
    pub steps: usize,
    pub mean_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub epoch: usize,
    pub generator_steps: usize,
    pub generator_loss: f64,
    pub style_source: DataSource,
    pub style_epochs: usize,
    pub style_loss: f64,
    pub generated: usize,
    pub degenerate: usize,
    pub source_loss: f64,
    pub validation: Option<f64>,
    pub events: Vec<PhaseEvent>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleTrace {
    pub manifest_hash: String,
    pub epochs_style: usize,
    pub epochs_source: usize,
    pub epochs: Vec<EpochTrace>,
}

impl ScheduleTrace {
    /// Header line followed by one line per outer epoch.
    pub fn to_jsonl(&self) -> String {
        let header = serde_json::json!({
            "manifest_hash": self.manifest_hash,
            "epochs_style": self.epochs_style,
            "epochs_source": self.epochs_source,
        });
        let mut out = header.to_string();
        out.push('\n');
        for e in &self.epochs {
            out.push_str(&serde_json::to_string(e).expect("trace serialises"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, String> {
        #[derive(Deserialize)]
        struct Header {
            manifest_hash: String,
            epochs_style: usize,
            epochs_source: usize,
        }
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Header = serde_json::from_str(lines.next().ok_or("empty trace")?).map_err(|e| e.to_string())?;
        let epochs = lines
            .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
            .collect::<Result<Vec<EpochTrace>, _>>()?;
        Ok(Self {
            manifest_hash: header.manifest_hash,
            epochs_style: header.epochs_style,
            epochs_source: header.epochs_source,
            epochs,
        })
    }

    fn next_seq(&self) -> u64 {
        self.epochs.iter().map(|e| e.events.len() as u64).sum()
    }
}

#[derive(Debug, Error)]
pub enum PhaseError {
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Discriminator(#[from] DiscriminatorError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("{count} generation failures, first: {first}")]
    Generation { count: usize, first: String },
}

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("invalid schedule config: {0}")]
    ConfigInvalid(String),
    #[error("need at least 2 human TRAIN records with publishers, found {0}")]
    TooFewHumanRecords(usize),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("outer epoch {epoch}, phase {phase}: {source}")]
    Epoch {
        epoch: usize,
        phase: Phase,
        #[source]
        source: PhaseError,
    },
    #[error("corrupt checkpoint {path}: {message}")]
    CorruptCheckpoint { path: PathBuf, message: String },
    #[error("checkpoint was written with seed {stored}, resume requested seed {given}")]
    SeedMismatch { stored: u64, given: u64 },
    #[error(transparent)]
    Checkpoint(CheckpointError),
}

impl From<CheckpointError> for ScheduleError {
    fn from(e: CheckpointError) -> Self {
        match e {
            CheckpointError::Corrupt { path, message } => ScheduleError::CorruptCheckpoint {
                path: path.into(),
                message,
            },
            other => ScheduleError::Checkpoint(other),
        }
    }
}

/// Hooks into a running schedule.
pub trait ScheduleObserver {
    /// Called after each phase with the ids of the records it consumed or produced.
    fn on_phase(&mut self, _event: &PhaseEvent, _ids: &[&str]) {}

    /// Model-selection score recorded in the epoch trace.
    fn validate(&mut self, _epoch: usize, _artifacts: &Artifacts) -> Option<f64> {
        None
    }
}

#[derive(Default)]
pub struct RunOptions<'a> {
    /// Written after every outer epoch when set.
    pub checkpoint_dir: Option<PathBuf>,
    /// Stop (after checkpointing) once this outer epoch completes.
    pub stop_after_epoch: Option<usize>,
    pub observer: Option<&'a mut dyn ScheduleObserver>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Artifacts {
    pub generator: TinyLm,
    pub trainer: GeneratorTrainer,
    pub discriminators: Discriminators,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleOutcome {
    pub artifacts: Artifacts,
    pub trace: ScheduleTrace,
    pub split: CorpusSplit,
    /// Synthetic news from the last completed epoch.
    pub machine: Vec<NewsRecord>,
    pub complete: bool,
}

/// Everything needed to continue after a completed outer epoch.
struct State {
    config: ScheduleConfig,
    human: Vec<NewsRecord>,
    split: CorpusSplit,
    artifacts: Artifacts,
    trace: ScheduleTrace,
    machine: Vec<NewsRecord>,
    machine_history: Vec<NewsRecord>,
}

pub fn ids_digest(ids: &[&str]) -> String {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    let mut h = Sha256::new();
    for id in sorted {
        h.update(id.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Vocabulary over the human training records plus the prompt control tokens.
pub fn build_vocab(human: &[NewsRecord]) -> Vocab {
    let mut vocab = Vocab::build(
        human
            .iter()
            .flat_map(|r| [r.publisher.as_str(), r.highlight.as_str(), r.content.as_str()]),
    );
    vocab.add_special_tokens(&SpecialTokens::default());
    vocab
}

fn human_train(corpus: &[NewsRecord]) -> Vec<NewsRecord> {
    corpus
        .iter()
        .filter(|r| r.source == Source::Human && r.split == Split::Train && !r.publisher.is_empty())
        .cloned()
        .collect()
}

/// Runs the schedule from scratch.
pub fn run_schedule(
    corpus: &[NewsRecord],
    config: &ScheduleConfig,
    options: RunOptions<'_>,
) -> Result<ScheduleOutcome, ScheduleError> {
    config.validate()?;
    let human = human_train(corpus);
    if human.len() < 2 {
        return Err(ScheduleError::TooFewHumanRecords(human.len()));
    }
    let seed = config.seed;
    let split = corpus::split_sampled(
        &human,
        config.schedule.split_ratio,
        rng::derive_seed(seed, &[rng::tag("split")]),
    )?;
    let generator = TinyLm::new(
        build_vocab(&human),
        config.model.clone(),
        rng::derive_seed(seed, &[rng::tag("lm")]),
    );
    let discriminators = Discriminators::new(
        Arc::new(generator.embedding_table()),
        LabelIndex::from_records(&human),
        &config.dm,
        rng::derive_seed(seed, &[rng::tag("dm")]),
    );
    let trainer = GeneratorTrainer::new(&generator);
    let state = State {
        config: config.clone(),
        human,
        split,
        artifacts: Artifacts {
            generator,
            trainer,
            discriminators,
        },
        trace: ScheduleTrace {
            manifest_hash: config.manifest_hash(),
            epochs_style: config.schedule.epochs_style,
            epochs_source: config.schedule.epochs_source,
            epochs: Vec::new(),
        },
        machine: Vec::new(),
        machine_history: Vec::new(),
    };
    drive(state, options)
}

/// Continues a checkpointed run. With `config` given it must match the one
/// stored in the checkpoint.
pub fn resume_schedule(
    dir: &Path,
    config: Option<&ScheduleConfig>,
    options: RunOptions<'_>,
) -> Result<ScheduleOutcome, ScheduleError> {
    let state = load_state(dir)?;
    if let Some(given) = config {
        if given.seed != state.config.seed {
            return Err(ScheduleError::SeedMismatch {
                stored: state.config.seed,
                given: given.seed,
            });
        }
        if given != &state.config {
            return Err(ScheduleError::ConfigInvalid(
                "config differs from the one stored in the checkpoint".into(),
            ));
        }
    }
    drive(state, options)
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for v in values {
        s += v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn drive(mut state: State, mut options: RunOptions<'_>) -> Result<ScheduleOutcome, ScheduleError> {
    let total = state.config.schedule.epochs_source;
    while state.trace.epochs.len() < total {
        let epoch = state.trace.epochs.len() + 1;
        let entry = run_epoch(&mut state, epoch, &mut options)?;
        state.trace.epochs.push(entry);
        if let Some(dir) = &options.checkpoint_dir {
            save_state(&state, dir)?;
        }
        if options.stop_after_epoch == Some(epoch) && epoch < total {
            return Ok(outcome(state, false));
        }
    }
    if let Some(dir) = &options.checkpoint_dir {
        save_state(&state, dir)?;
    }
    Ok(outcome(state, true))
}

fn outcome(state: State, complete: bool) -> ScheduleOutcome {
    ScheduleOutcome {
        artifacts: state.artifacts,
        trace: state.trace,
        split: state.split,
        machine: state.machine,
        complete,
    }
}

struct EventLog<'a, 'b> {
    epoch: usize,
    seq: u64,
    events: Vec<PhaseEvent>,
    observer: &'a mut Option<&'b mut dyn ScheduleObserver>,
}

impl EventLog<'_, '_> {
    fn record(&mut self, phase: Phase, data: DataSource, ids: &[&str], steps: usize, mean_loss: Option<f64>) {
        let event = PhaseEvent {
            seq: self.seq,
            epoch: self.epoch,
            phase,
            data,
            records: ids.len(),
            ids_digest: ids_digest(ids),
            steps,
            mean_loss,
        };
        self.seq += 1;
        if let Some(obs) = self.observer.as_deref_mut() {
            obs.on_phase(&event, ids);
        }
        self.events.push(event);
    }
}

fn run_epoch(state: &mut State, epoch: usize, options: &mut RunOptions<'_>) -> Result<EpochTrace, ScheduleError> {
    let cfg = state.config.clone();
    let seed = cfg.seed;
    let e = epoch as u64;
    let at = |phase: Phase| move |source: PhaseError| ScheduleError::Epoch { epoch, phase, source };
    let mut log = EventLog {
        epoch,
        seq: state.trace.next_seq(),
        events: Vec::new(),
        observer: &mut options.observer,
    };
    let art = &mut state.artifacts;

    // (a) generator on the unsampled group
    let unsampled: Vec<NewsRecord> = state.split.select(&state.human, false).into_iter().cloned().collect();
    let prompts = unsampled
        .iter()
        .map(|r| {
            prompting::build_prompt(
                &r.publisher,
                &r.highlight,
                &r.content,
                cfg.generator.max_length,
                art.generator.vocab(),
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|err| at(Phase::FineTuneGenerator)(err.into()))?;
    let losses = art
        .trainer
        .fine_tune(
            &mut art.generator,
            &prompts,
            &cfg.generator,
            rng::derive_seed(seed, &[rng::tag("lm_shuffle"), e]),
        )
        .map_err(|err| at(Phase::FineTuneGenerator)(err.into()))?;
    let generator_loss = mean(losses.iter().map(|l| l.loss));
    let ids: Vec<&str> = unsampled.iter().map(|r| r.id.as_str()).collect();
    log.record(
        Phase::FineTuneGenerator,
        DataSource::Human,
        &ids,
        losses.len(),
        Some(generator_loss),
    );
    art.discriminators
        .refresh_table(&Arc::new(art.generator.embedding_table()), epoch == 1);

    // (b) style discriminator: human text first, synthetic text afterwards
    let (style_data, style_source): (Vec<NewsRecord>, DataSource) = if epoch == 1 {
        (unsampled.clone(), DataSource::Human)
    } else {
        (
            state
                .machine
                .iter()
                .filter(|r| !r.content.is_empty())
                .cloned()
                .collect(),
            DataSource::Synthetic,
        )
    };
    let style_losses = art
        .discriminators
        .train_style(
            &style_data,
            art.generator.vocab(),
            cfg.schedule.epochs_style,
            &cfg.dm,
            rng::derive_seed(seed, &[rng::tag("style"), e]),
        )
        .map_err(|err| at(Phase::TrainStyle)(err.into()))?;
    let style_loss = mean(style_losses.iter().copied());
    let ids: Vec<&str> = style_data.iter().map(|r| r.id.as_str()).collect();
    log.record(
        Phase::TrainStyle,
        style_source,
        &ids,
        style_losses.len(),
        Some(style_loss),
    );

    // (c) synthetic news from the sampled group
    let sampled = state.split.select(&state.human, true);
    let gen_config = GeneratorConfig {
        seed: rng::derive_seed(seed, &[rng::tag("generate"), e]),
        ..cfg.generator.clone()
    };
    let batch = generator::batch_generate(&art.generator, &sampled, &gen_config);
    if let Some(first) = batch.failures.first() {
        return Err(at(Phase::Generate)(PhaseError::Generation {
            count: batch.failures.len(),
            first: format!("{}: {}", first.id, first.error),
        }));
    }
    let degenerate = batch.degenerate.len();
    state.machine = batch.records;
    state.machine_history.extend(state.machine.iter().cloned());
    let ids: Vec<&str> = state.machine.iter().map(|r| r.id.as_str()).collect();
    log.record(Phase::Generate, DataSource::Synthetic, &ids, 0, None);

    // (d) source discriminator on human plus synthetic text
    let human_src: Vec<NewsRecord> = if cfg.schedule.source_uses_full_human {
        state.human.clone()
    } else {
        sampled.into_iter().cloned().collect()
    };
    let machine_pool = if cfg.schedule.accumulate_machine {
        &state.machine_history
    } else {
        &state.machine
    };
    let machine_src: Vec<NewsRecord> = machine_pool.iter().filter(|r| !r.content.is_empty()).cloned().collect();
    let source_losses = art
        .discriminators
        .train_source(
            &human_src,
            &machine_src,
            art.generator.vocab(),
            cfg.schedule.source_passes,
            &cfg.dm,
            rng::derive_seed(seed, &[rng::tag("source"), e]),
        )
        .map_err(|err| at(Phase::TrainSource)(err.into()))?;
    let source_loss = mean(source_losses.iter().copied());
    let ids: Vec<&str> = human_src.iter().chain(&machine_src).map(|r| r.id.as_str()).collect();
    log.record(
        Phase::TrainSource,
        DataSource::Mixed,
        &ids,
        source_losses.len(),
        Some(source_loss),
    );

    let events = log.events;
    let validation = options
        .observer
        .as_deref_mut()
        .and_then(|o| o.validate(epoch, &state.artifacts));
    Ok(EpochTrace {
        epoch,
        generator_steps: losses.len(),
        generator_loss,
        style_source,
        style_epochs: cfg.schedule.epochs_style,
        style_loss,
        generated: state.machine.len(),
        degenerate,
        source_loss,
        validation,
        events,
    })
}

#[derive(Serialize, Deserialize)]
struct RngState {
    master_seed: u64,
    next_epoch: usize,
}

#[derive(Serialize, Deserialize)]
struct ConfigManifest {
    manifest_hash: String,
    config: ScheduleConfig,
}

#[derive(Serialize, Deserialize)]
struct MachineSets {
    current: Vec<NewsRecord>,
    history: Vec<NewsRecord>,
}

fn save_state(state: &State, dir: &Path) -> Result<(), ScheduleError> {
    checkpoint::create_dir(dir)?;
    let art = &state.artifacts;
    art.generator.save(&dir.join("generator"), art.trainer.steps)?;
    art.trainer.save(&dir.join("generator").join("optimizer.bin"))?;
    art.discriminators.save(&dir.join("d_style"), &dir.join("d_source"))?;
    checkpoint::write_bytes(&dir.join("trace"), state.trace.to_jsonl().as_bytes())?;
    checkpoint::write_json(
        &dir.join("rng_state"),
        &RngState {
            master_seed: state.config.seed,
            next_epoch: state.trace.epochs.len() + 1,
        },
    )?;
    checkpoint::write_json(
        &dir.join("config_manifest"),
        &ConfigManifest {
            manifest_hash: state.config.manifest_hash(),
            config: state.config.clone(),
        },
    )?;
    checkpoint::write_json(&dir.join("human.json"), &state.human)?;
    checkpoint::write_json(&dir.join("split.json"), &state.split)?;
    checkpoint::write_json(
        &dir.join("machine.json"),
        &MachineSets {
            current: state.machine.clone(),
            history: state.machine_history.clone(),
        },
    )?;
    Ok(())
}

/// Loads the generator and discriminators from a checkpoint directory.
pub fn load_artifacts(dir: &Path) -> Result<Artifacts, ScheduleError> {
    let (generator, _) = TinyLm::load(&dir.join("generator"))?;
    let trainer = GeneratorTrainer::load(&dir.join("generator").join("optimizer.bin"))?;
    let table = Arc::new(generator.embedding_table());
    let discriminators = Discriminators::load(&dir.join("d_style"), &dir.join("d_source"), &table)?;
    Ok(Artifacts {
        generator,
        trainer,
        discriminators,
    })
}

/// The config stored alongside a checkpoint.
pub fn load_config(dir: &Path) -> Result<ScheduleConfig, ScheduleError> {
    let path = dir.join("config_manifest");
    let m: ConfigManifest = checkpoint::read_json(&path)?;
    if m.config.manifest_hash() != m.manifest_hash {
        return Err(CheckpointError::corrupt(&path, "config hash mismatch").into());
    }
    Ok(m.config)
}

fn load_state(dir: &Path) -> Result<State, ScheduleError> {
    let config = load_config(dir)?;
    let rpath = dir.join("rng_state");
    let rng_state: RngState = checkpoint::read_json(&rpath)?;
    if rng_state.master_seed != config.seed {
        return Err(CheckpointError::corrupt(&rpath, "seed differs from config manifest").into());
    }
    let tpath = dir.join("trace");
    let trace = ScheduleTrace::from_jsonl(&checkpoint::read_string(&tpath)?)
        .map_err(|m| CheckpointError::corrupt(&tpath, m))?;
    if trace.epochs.len() + 1 != rng_state.next_epoch || trace.manifest_hash != config.manifest_hash() {
        return Err(CheckpointError::corrupt(&tpath, "trace does not match rng_state or config").into());
    }
    let machine: MachineSets = checkpoint::read_json(&dir.join("machine.json"))?;
    Ok(State {
        human: checkpoint::read_json(&dir.join("human.json"))?,
        split: checkpoint::read_json(&dir.join("split.json"))?,
        artifacts: load_artifacts(dir)?,
        trace,
        machine: machine.current,
        machine_history: machine.history,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy;

    fn small_config() -> ScheduleConfig {
        ScheduleConfig {
            seed: 11,
            schedule: ScheduleSettings {
                epochs_style: 2,
                epochs_source: 2,
                ..ScheduleSettings::default()
            },
            generator: GeneratorConfig {
                learning_rate: 0.01,
                warmup_steps: 5,
                max_length: 48,
                ..GeneratorConfig::default()
            },
            model: LmConfig {
                embedding_width: 8,
                hidden_width: 8,
                embedding_init: 0.3,
            },
            dm: DmConfig::default(),
        }
    }

    fn tiny_corpus() -> Vec<NewsRecord> {
        toy::corpus(0)
            .into_iter()
            .filter(|r| r.split == Split::Train)
            .take(12)
            .collect()
    }

    #[test]
    fn trace_shape() {
        let out = run_schedule(&tiny_corpus(), &small_config(), RunOptions::default()).unwrap();
        assert!(out.complete);
        let t = &out.trace;
        assert_eq!(t.epochs.len(), 2);
        assert_eq!(t.epochs[0].style_source, DataSource::Human);
        assert_eq!(t.epochs[1].style_source, DataSource::Synthetic);
        for e in &t.epochs {
            assert_eq!(e.generated, out.split.sampled.len());
            let phases: Vec<Phase> = e.events.iter().map(|ev| ev.phase).collect();
            assert_eq!(
                phases,
                [
                    Phase::FineTuneGenerator,
                    Phase::TrainStyle,
                    Phase::Generate,
                    Phase::TrainSource
                ]
            );
        }
        let seqs: Vec<u64> = t.epochs.iter().flat_map(|e| e.events.iter().map(|ev| ev.seq)).collect();
        assert_eq!(seqs, (0..8).collect::<Vec<_>>());
        assert_eq!(ScheduleTrace::from_jsonl(&t.to_jsonl()).unwrap(), *t);
    }

    #[test]
    fn invalid_configs() {
        let mut c = small_config();
        c.schedule.epochs_source = 0;
        assert!(matches!(
            run_schedule(&tiny_corpus(), &c, RunOptions::default()),
            Err(ScheduleError::ConfigInvalid(_))
        ));
        let c = small_config();
        assert!(matches!(
            run_schedule(&tiny_corpus()[..1], &c, RunOptions::default()),
            Err(ScheduleError::TooFewHumanRecords(1))
        ));
    }

    #[test]
    fn resume_checks_seed_and_config() {
        let dir = tempfile::tempdir().unwrap();
        let c = small_config();
        let opts = RunOptions {
            checkpoint_dir: Some(dir.path().to_path_buf()),
            stop_after_epoch: Some(1),
            observer: None,
        };
        let partial = run_schedule(&tiny_corpus(), &c, opts).unwrap();
        assert!(!partial.complete);
        let other_seed = ScheduleConfig { seed: 12, ..c.clone() };
        assert!(matches!(
            resume_schedule(dir.path(), Some(&other_seed), RunOptions::default()),
            Err(ScheduleError::SeedMismatch { stored: 11, given: 12 })
        ));
        let mut other = c.clone();
        other.schedule.epochs_style = 3;
        assert!(matches!(
            resume_schedule(dir.path(), Some(&other), RunOptions::default()),
            Err(ScheduleError::ConfigInvalid(_))
        ));
        std::fs::write(dir.path().join("trace"), "not json").unwrap();
        assert!(matches!(
            resume_schedule(dir.path(), None, RunOptions::default()),
            Err(ScheduleError::CorruptCheckpoint { .. })
        ));
    }
}
