//! The style-aware generator: fine-tuning a causal language model on prompt
//! sequences and sampling publisher-conditioned news content.

mod sampling;
mod tiny;

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use sampling::{sample_next, DecodeStrategy};
pub use tiny::{LmConfig, TinyLm, TinyState};

use crate::checkpoint::{self, CheckpointError};
use crate::corpus::{NewsRecord, Source, Split};
use crate::optim::{AdamConfig, AdamState, DecayMode};
use crate::prompting::{self, PromptError, PromptSequence};
use crate::rng;
use crate::vocab::{TokenId, Vocab};
use crate::wordgraph::EmbeddingTable;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("no prompts to train on")]
    EmptyTrainingSet,
    #[error("non-finite loss at optimisation step {step}")]
    NonFiniteLoss { step: u64 },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub learning_rate: f64,
    pub warmup_steps: u64,
    pub weight_decay: f64,
    pub train_batch_size: usize,
    pub generation_batch_size: usize,
    pub max_length: usize,
    pub decode: DecodeStrategy,
    pub nucleus_mass: f64,
    pub temperature: f64,
    pub seed: u64,
    /// Passes over the training prompts per call to [`GeneratorTrainer::fine_tune`].
    pub passes_per_epoch: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-5,
            warmup_steps: 1000,
            weight_decay: 0.01,
            train_batch_size: 2,
            generation_batch_size: 32,
            max_length: 1024,
            decode: DecodeStrategy::Nucleus,
            nucleus_mass: 0.95,
            temperature: 1.0,
            seed: 0,
            passes_per_epoch: 1,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: &str| Err(GeneratorError::InvalidConfig(m.into()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if !(self.nucleus_mass > 0.0 && self.nucleus_mass <= 1.0) {
            return bad("nucleus_mass must lie in (0, 1]");
        }
        if !(self.temperature > 0.0) {
            return bad("temperature must be > 0");
        }
        if self.max_length < 2 {
            return bad("max_length must be >= 2");
        }
        if self.train_batch_size == 0 || self.generation_batch_size == 0 {
            return bad("batch sizes must be >= 1");
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight_decay must be >= 0");
        }
        Ok(())
    }
}

/// Contract for a causal language model usable as the generator backbone.
pub trait LanguageModel {
    type State: Clone;

    fn vocab(&self) -> &Vocab;

    /// Copy of the token embedding table, consumed by the word-graph encoder.
    fn embedding_table(&self) -> EmbeddingTable;

    fn begin(&self) -> Self::State;

    fn push(&self, state: &mut Self::State, token: TokenId);

    fn next_logits(&self, state: &Self::State) -> Vec<f64>;

    fn parameters(&self) -> &[f64];

    fn parameters_mut(&mut self) -> &mut [f64];

    /// Summed negative log-likelihood of `tokens[1..]` given their prefixes;
    /// adds the gradient of that sum into `grad`.
    fn nll_and_grad(&self, tokens: &[TokenId], grad: &mut [f64]) -> Result<f64, GeneratorError>;

    fn next_token_distribution(&self, prefix: &[TokenId]) -> Vec<f64> {
        let mut state = self.begin();
        for &t in prefix {
            self.push(&mut state, t);
        }
        tiny::softmax(&self.next_logits(&state))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossEntry {
    pub step: u64,
    pub loss: f64,
    pub learning_rate: f64,
}

/// Optimizer state that persists across fine-tuning calls.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorTrainer {
    pub optimizer: AdamState,
    pub steps: u64,
}

/// Sequence the language model is trained on: the prompt, plus end-of-text
/// when there is room for it.
pub fn training_sequence(prompt: &PromptSequence, max_len: usize) -> Vec<TokenId> {
    let mut ids = prompt.token_ids.clone();
    if ids.len() < max_len {
        ids.push(Vocab::END_OF_TEXT);
    }
    ids
}

impl GeneratorTrainer {
    pub fn new<M: LanguageModel>(model: &M) -> Self {
        Self {
            optimizer: AdamState::new(model.parameters().len()),
            steps: 0,
        }
    }

    pub fn learning_rate(&self, config: &GeneratorConfig) -> f64 {
        if config.warmup_steps == 0 {
            return config.learning_rate;
        }
        let frac = (self.steps + 1) as f64 / config.warmup_steps as f64;
        config.learning_rate * frac.min(1.0)
    }

    /// Minimises token-level NLL (mean over the non-padding tokens of each
    /// batch) for `config.passes_per_epoch` shuffled passes. `shuffle_seed`
    /// drives the batch order.
    pub fn fine_tune<M: LanguageModel>(
        &mut self,
        model: &mut M,
        prompts: &[PromptSequence],
        config: &GeneratorConfig,
        shuffle_seed: u64,
    ) -> Result<Vec<LossEntry>, GeneratorError> {
        config.validate()?;
        if prompts.is_empty() {
            return Err(GeneratorError::EmptyTrainingSet);
        }
        let sequences: Vec<Vec<TokenId>> = prompts
            .iter()
            .map(|p| training_sequence(p, config.max_length))
            .collect();
        let adam = AdamConfig::new(config.weight_decay, DecayMode::Decoupled);
        let mut trace = Vec::new();
        let mut grad = vec![0.0; model.parameters().len()];
        for pass in 0..config.passes_per_epoch {
            let mut order: Vec<usize> = (0..sequences.len()).collect();
            order.shuffle(&mut rng::stream(shuffle_seed, &[rng::tag("lm_pass"), pass as u64]));
            for batch in order.chunks(config.train_batch_size) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let mut nll = 0.0;
                let mut count = 0usize;
                for &i in batch {
                    nll += model.nll_and_grad(&sequences[i], &mut grad)?;
                    count += sequences[i].len().saturating_sub(1);
                }
                if count == 0 {
                    continue;
                }
                let loss = nll / count as f64;
                grad.iter_mut().for_each(|g| *g /= count as f64);
                if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(GeneratorError::NonFiniteLoss { step: self.steps });
                }
                let lr = self.learning_rate(config);
                self.optimizer.step(model.parameters_mut(), &grad, lr, &adam);
                trace.push(LossEntry {
                    step: self.steps,
                    loss,
                    learning_rate: lr,
                });
                self.steps += 1;
            }
        }
        Ok(trace)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut values = vec![self.steps as f64];
        values.extend(self.optimizer.to_f64s());
        checkpoint::write_f64s(path, &values)
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let values = checkpoint::read_f64s(path)?;
        let corrupt = || CheckpointError::corrupt(path, "malformed optimizer state");
        let (&steps, rest) = values.split_first().ok_or_else(corrupt)?;
        Ok(Self {
            steps: steps as u64,
            optimizer: AdamState::from_f64s(rest).ok_or_else(corrupt)?,
        })
    }
}

/// Mean NLL per predicted token over `sequences`, computed by summing
/// per-position log-probabilities from [`LanguageModel::next_token_distribution`].
pub fn mean_nll<M: LanguageModel>(model: &M, sequences: &[Vec<TokenId>]) -> f64 {
    let (mut total, mut count) = (0.0, 0usize);
    for seq in sequences {
        for t in 1..seq.len() {
            let p = model.next_token_distribution(&seq[..t]);
            total -= p[seq[t] as usize].ln();
            count += 1;
        }
    }
    total / count.max(1) as f64
}

/// Result of generating one article.
#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub record: NewsRecord,
    /// Full token sequence, frame included.
    pub tokens: Vec<TokenId>,
    /// The continuation was empty after stripping control tokens.
    pub degenerate: bool,
}

/// Samples a continuation of the publisher/highlight frame. Randomness comes
/// from `(config.seed, item)` only, so items can be generated in any order.
pub fn generate<M: LanguageModel>(
    model: &M,
    id: &str,
    publisher: &str,
    highlight: &str,
    config: &GeneratorConfig,
    item: u64,
) -> Result<Generated, GeneratorError> {
    config.validate()?;
    let vocab = model.vocab();
    let special = vocab.special_ids().ok_or(PromptError::MissingSpecialTokens)?;
    let frame = prompting::build_frame(publisher, highlight, config.max_length, vocab)?;
    let mut r = rng::stream(config.seed, &[rng::tag("generate"), item]);
    let mut state = model.begin();
    let mut tokens = frame.token_ids.clone();
    for &t in &tokens {
        model.push(&mut state, t);
    }
    while tokens.len() < config.max_length {
        let logits = model.next_logits(&state);
        let next = sample_next(&logits, config.decode, config.nucleus_mass, config.temperature, &mut r);
        if next == special.end_of_text {
            break;
        }
        tokens.push(next);
        model.push(&mut state, next);
    }
    let content_ids = prompting::strip_to_content(&tokens, &special)?;
    let content = vocab.decode(&content_ids);
    Ok(Generated {
        degenerate: content.is_empty(),
        record: NewsRecord {
            id: id.to_string(),
            publisher: publisher.to_string(),
            highlight: highlight.to_string(),
            content,
            source: Source::Machine,
            split: Split::Train,
        },
        tokens,
    })
}

#[derive(Debug)]
pub struct GenerationFailure {
    pub index: usize,
    pub id: String,
    pub error: GeneratorError,
}

#[derive(Debug, Default)]
pub struct BatchGeneration {
    pub records: Vec<NewsRecord>,
    /// Input positions of the successful records, aligned with `records`.
    pub positions: Vec<usize>,
    pub failures: Vec<GenerationFailure>,
    pub degenerate: Vec<usize>,
}

/// Id given to the machine article generated from human record `id`.
pub fn machine_id(id: &str) -> String {
    format!("{id}::M")
}

/// One machine article per input record, conditioned on its publisher and
/// highlight. Per-item failures are collected, not propagated.
pub fn batch_generate<M: LanguageModel>(
    model: &M,
    records: &[&NewsRecord],
    config: &GeneratorConfig,
) -> BatchGeneration {
    let mut out = BatchGeneration::default();
    for (chunk_no, chunk) in records.chunks(config.generation_batch_size.max(1)).enumerate() {
        for (j, rec) in chunk.iter().enumerate() {
            let index = chunk_no * config.generation_batch_size.max(1) + j;
            let id = machine_id(&rec.id);
            match generate(model, &id, &rec.publisher, &rec.highlight, config, index as u64) {
                Ok(g) => {
                    if g.degenerate {
                        out.degenerate.push(index);
                    }
                    let mut record = g.record;
                    record.split = rec.split;
                    out.records.push(record);
                    out.positions.push(index);
                }
                Err(error) => out.failures.push(GenerationFailure {
                    index,
                    id: rec.id.clone(),
                    error,
                }),
            }
        }
    }
    out
}
