//! Style (publisher) and source (human vs machine) discriminators built on the
//! word-graph encoder, with an optional shared backbone.

use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checkpoint::{self, CheckpointError};
use crate::corpus::{NewsRecord, Source};
use crate::rng;
use crate::vocab::{TokenId, Vocab};
use crate::wordgraph::{
    self, build_graph, dm_train_step, DmBackbone, DmError, DmHead, DmModel, DmOptimizer, DropoutPlacement,
    EmbeddingTable, WordGraph,
};

#[derive(Debug, Error)]
pub enum DiscriminatorError {
    #[error("record {id}: publisher `{publisher}` is not in the label index")]
    UnknownPublisher { id: String, publisher: String },
    #[error("input has no tokens")]
    EmptyInput,
    #[error("no {0} examples to train on")]
    EmptyClass(Source),
    #[error("record {id}: source must be H or M")]
    UnresolvedSource { id: String },
    #[error("backbones cannot be shared: {0}")]
    IncompatibleBackbones(String),
    #[error(transparent)]
    Dm(#[from] DmError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DmConfig {
    pub hops: usize,
    pub dropout: f64,
    pub dropout_placement: DropoutPlacement,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub frozen_embeddings: bool,
    pub shared_backbone: bool,
    /// Inverse-frequency class weights for source training.
    pub class_weighting: bool,
}

impl Default for DmConfig {
    fn default() -> Self {
        Self {
            hops: 1,
            dropout: 0.1,
            dropout_placement: DropoutPlacement::Logits,
            learning_rate: 1e-3,
            weight_decay: 1e-4,
            batch_size: 16,
            frozen_embeddings: true,
            shared_backbone: false,
            class_weighting: false,
        }
    }
}

impl DmConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.hops == 0 {
            return Err("dm.hops must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err("dm.dropout must lie in [0, 1)".into());
        }
        if !(self.learning_rate > 0.0) {
            return Err("dm.learning_rate must be > 0".into());
        }
        if self.batch_size == 0 {
            return Err("dm.batch_size must be >= 1".into());
        }
        Ok(())
    }

    fn optimizer(&self) -> DmOptimizer {
        DmOptimizer {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
        }
    }
}

/// Bijection between publisher names (sorted) and class indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelIndex {
    names: Vec<String>,
}

impl LabelIndex {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
        names.sort();
        names.dedup();
        Self { names }
    }

    pub fn from_records(records: &[NewsRecord]) -> Self {
        Self::new(records.iter().map(|r| r.publisher.clone()))
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn source_label(source: Source) -> Option<usize> {
    match source {
        Source::Human => Some(0),
        Source::Machine => Some(1),
        Source::Unknown => None,
    }
}

pub fn content_graph(vocab: &Vocab, content: &str, hops: usize) -> Result<WordGraph, DiscriminatorError> {
    tokens_graph(&vocab.encode_content(content), hops)
}

fn tokens_graph(tokens: &[TokenId], hops: usize) -> Result<WordGraph, DiscriminatorError> {
    if tokens.is_empty() {
        return Err(DiscriminatorError::EmptyInput);
    }
    Ok(build_graph(tokens, hops)?)
}

/// Runs `epochs` shuffled passes of minibatch training. Returns per-step losses.
pub fn train_dm(
    backbone: &mut DmBackbone,
    head: &mut DmHead,
    examples: &[(WordGraph, usize)],
    epochs: usize,
    config: &DmConfig,
    class_weights: Option<&[f64]>,
    seed: u64,
) -> Result<Vec<f64>, DiscriminatorError> {
    let optimizer = config.optimizer();
    let mut losses = Vec::new();
    for epoch in 0..epochs {
        let mut order: Vec<usize> = (0..examples.len()).collect();
        order.shuffle(&mut rng::stream(seed, &[rng::tag("dm_shuffle"), epoch as u64]));
        let mut dropout_rng = rng::stream(seed, &[rng::tag("dm_dropout"), epoch as u64]);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&WordGraph, usize)> = chunk.iter().map(|&i| (&examples[i].0, examples[i].1)).collect();
            losses.push(dm_train_step(
                &batch,
                backbone,
                head,
                &optimizer,
                class_weights,
                &mut dropout_rng,
            )?);
        }
    }
    Ok(losses)
}

fn probabilities(backbone: &DmBackbone, head: &DmHead, tokens: &[TokenId]) -> Result<Vec<f64>, DiscriminatorError> {
    let graph = tokens_graph(tokens, backbone.hops)?;
    let logits = wordgraph::forward_with_alpha(&graph, &backbone.table, backbone.alpha(), head)?;
    Ok(wordgraph::softmax(&logits))
}

fn style_examples(
    records: &[NewsRecord],
    labels: &LabelIndex,
    vocab: &Vocab,
    hops: usize,
) -> Result<Vec<(WordGraph, usize)>, DiscriminatorError> {
    records
        .iter()
        .map(|r| {
            let label = labels
                .index(&r.publisher)
                .ok_or_else(|| DiscriminatorError::UnknownPublisher {
                    id: r.id.clone(),
                    publisher: r.publisher.clone(),
                })?;
            Ok((content_graph(vocab, &r.content, hops)?, label))
        })
        .collect()
}

fn source_examples(
    human: &[NewsRecord],
    machine: &[NewsRecord],
    vocab: &Vocab,
    hops: usize,
    weighting: bool,
) -> Result<(Vec<(WordGraph, usize)>, Option<Vec<f64>>), DiscriminatorError> {
    if human.is_empty() {
        return Err(DiscriminatorError::EmptyClass(Source::Human));
    }
    if machine.is_empty() {
        return Err(DiscriminatorError::EmptyClass(Source::Machine));
    }
    let mut examples = Vec::with_capacity(human.len() + machine.len());
    for (set, label) in [(human, 0usize), (machine, 1usize)] {
        for r in set {
            examples.push((content_graph(vocab, &r.content, hops)?, label));
        }
    }
    let weights = weighting.then(|| {
        let n = examples.len() as f64;
        vec![n / (2.0 * human.len() as f64), n / (2.0 * machine.len() as f64)]
    });
    Ok((examples, weights))
}

fn new_backbone(table: Arc<EmbeddingTable>, config: &DmConfig) -> DmBackbone {
    DmBackbone::new(table, config.hops, config.frozen_embeddings)
}

fn new_head(d_r: usize, d_c: usize, config: &DmConfig, seed: u64, role: &str) -> DmHead {
    DmHead::glorot(
        d_r,
        d_c,
        config.dropout,
        config.dropout_placement,
        &mut rng::stream(seed, &[rng::tag("dm_head_init"), rng::tag(role)]),
    )
}

/// Predicts the publisher of a text.
#[derive(Clone, Debug, PartialEq)]
pub struct StyleDiscriminator {
    pub model: DmModel,
    pub labels: LabelIndex,
}

impl StyleDiscriminator {
    pub fn new(table: Arc<EmbeddingTable>, labels: LabelIndex, config: &DmConfig, seed: u64) -> Self {
        let d_r = table.width();
        let head = new_head(d_r, labels.len(), config, seed, "style");
        Self {
            model: DmModel {
                backbone: new_backbone(table, config),
                head,
            },
            labels,
        }
    }

    /// Trains on `(content, publisher)` pairs; returns per-step losses.
    pub fn train(
        &mut self,
        records: &[NewsRecord],
        vocab: &Vocab,
        epochs: usize,
        config: &DmConfig,
        seed: u64,
    ) -> Result<Vec<f64>, DiscriminatorError> {
        let examples = style_examples(records, &self.labels, vocab, self.model.backbone.hops)?;
        train_dm(
            &mut self.model.backbone,
            &mut self.model.head,
            &examples,
            epochs,
            config,
            None,
            seed,
        )
    }

    pub fn classify(&self, tokens: &[TokenId]) -> Result<(String, Vec<f64>), DiscriminatorError> {
        let probs = probabilities(&self.model.backbone, &self.model.head, tokens)?;
        let name = self.labels.name(argmax(&probs)).unwrap_or_default().to_string();
        Ok((name, probs))
    }
}

/// Decides human-written (class 0) vs machine-generated (class 1).
#[derive(Clone, Debug, PartialEq)]
pub struct SourceDiscriminator {
    pub model: DmModel,
}

impl SourceDiscriminator {
    pub fn new(table: Arc<EmbeddingTable>, config: &DmConfig, seed: u64) -> Self {
        let d_r = table.width();
        Self {
            model: DmModel {
                backbone: new_backbone(table, config),
                head: new_head(d_r, 2, config, seed, "source"),
            },
        }
    }

    pub fn train(
        &mut self,
        human: &[NewsRecord],
        machine: &[NewsRecord],
        vocab: &Vocab,
        epochs: usize,
        config: &DmConfig,
        seed: u64,
    ) -> Result<Vec<f64>, DiscriminatorError> {
        let (examples, weights) =
            source_examples(human, machine, vocab, self.model.backbone.hops, config.class_weighting)?;
        train_dm(
            &mut self.model.backbone,
            &mut self.model.head,
            &examples,
            epochs,
            config,
            weights.as_deref(),
            seed,
        )
    }

    pub fn detect(&self, tokens: &[TokenId]) -> Result<(Source, f64), DiscriminatorError> {
        detect_with(&self.model.backbone, &self.model.head, tokens)
    }
}

fn detect_with(backbone: &DmBackbone, head: &DmHead, tokens: &[TokenId]) -> Result<(Source, f64), DiscriminatorError> {
    let probs = probabilities(backbone, head, tokens)?;
    let k = argmax(&probs);
    let label = if k == 0 { Source::Human } else { Source::Machine };
    Ok((label, probs[k]))
}

/// Both discriminators over one backbone (mixing weight and embedding table)
/// with separate heads.
#[derive(Clone, Debug, PartialEq)]
pub struct SharedDiscriminators {
    pub backbone: DmBackbone,
    pub style_head: DmHead,
    pub labels: LabelIndex,
    pub source_head: DmHead,
}

pub fn make_shared_backbone(
    style: StyleDiscriminator,
    source: SourceDiscriminator,
) -> Result<SharedDiscriminators, DiscriminatorError> {
    let (a, b) = (&style.model.backbone, &source.model.backbone);
    if a.hops != b.hops {
        return Err(DiscriminatorError::IncompatibleBackbones(format!(
            "hop counts differ ({} vs {})",
            a.hops, b.hops
        )));
    }
    if a.frozen != b.frozen {
        return Err(DiscriminatorError::IncompatibleBackbones("frozen flags differ".into()));
    }
    if !Arc::ptr_eq(&a.table, &b.table) && a.table.hash() != b.table.hash() {
        return Err(DiscriminatorError::IncompatibleBackbones(
            "embedding tables differ".into(),
        ));
    }
    Ok(SharedDiscriminators {
        backbone: style.model.backbone,
        style_head: style.model.head,
        labels: style.labels,
        source_head: source.model.head,
    })
}

impl SharedDiscriminators {
    pub fn train_style(
        &mut self,
        records: &[NewsRecord],
        vocab: &Vocab,
        epochs: usize,
        config: &DmConfig,
        seed: u64,
    ) -> Result<Vec<f64>, DiscriminatorError> {
        let examples = style_examples(records, &self.labels, vocab, self.backbone.hops)?;
        train_dm(
            &mut self.backbone,
            &mut self.style_head,
            &examples,
            epochs,
            config,
            None,
            seed,
        )
    }

    pub fn train_source(
        &mut self,
        human: &[NewsRecord],
        machine: &[NewsRecord],
        vocab: &Vocab,
        epochs: usize,
        config: &DmConfig,
        seed: u64,
    ) -> Result<Vec<f64>, DiscriminatorError> {
        let (examples, weights) = source_examples(human, machine, vocab, self.backbone.hops, config.class_weighting)?;
        train_dm(
            &mut self.backbone,
            &mut self.source_head,
            &examples,
            epochs,
            config,
            weights.as_deref(),
            seed,
        )
    }

    pub fn style_view(&self) -> StyleDiscriminator {
        StyleDiscriminator {
            model: DmModel {
                backbone: self.backbone.clone(),
                head: self.style_head.clone(),
            },
            labels: self.labels.clone(),
        }
    }

    pub fn source_view(&self) -> SourceDiscriminator {
        SourceDiscriminator {
            model: DmModel {
                backbone: self.backbone.clone(),
                head: self.source_head.clone(),
            },
        }
    }
}

/// The pair of discriminators trained by the schedule.
#[derive(Clone, Debug, PartialEq)]
pub enum Discriminators {
    Separate {
        style: StyleDiscriminator,
        source: SourceDiscriminator,
    },
    Shared(SharedDiscriminators),
}

#[derive(Serialize, Deserialize)]
struct DiscriminatorManifest {
    role: String,
    shared: bool,
    labels: Vec<String>,
}

impl Discriminators {
    pub fn new(table: Arc<EmbeddingTable>, labels: LabelIndex, config: &DmConfig, seed: u64) -> Self {
        let style = StyleDiscriminator::new(table.clone(), labels, config, seed);
        let source = SourceDiscriminator::new(table, config, seed);
        if config.shared_backbone {
            Discriminators::Shared(make_shared_backbone(style, source).expect("same table and config"))
        } else {
            Discriminators::Separate { style, source }
        }
    }

    /// Points frozen backbones at `table` (the generator's current
    /// embeddings). Trainable backbones copy it only when `first` is set and
    /// keep their own updates afterwards.
    pub fn refresh_table(&mut self, table: &Arc<EmbeddingTable>, first: bool) {
        let backbones: Vec<&mut DmBackbone> = match self {
            Discriminators::Separate { style, source } => vec![&mut style.model.backbone, &mut source.model.backbone],
            Discriminators::Shared(s) => vec![&mut s.backbone],
        };
        for b in backbones {
            if b.frozen || first {
                b.table = table.clone();
            }
        }
    }

    pub fn is_shared(&self) -> bool {
        matches!(self, Discriminators::Shared(_))
    }

    pub fn labels(&self) -> &LabelIndex {
        match self {
            Discriminators::Separate { style, .. } => &style.labels,
            Discriminators::Shared(s) => &s.labels,
        }
    }

    pub fn train_style(
        &mut self,
        records: &[NewsRecord],
        vocab: &Vocab,
        epochs: usize,
        config: &DmConfig,
        seed: u64,
    ) -> Result<Vec<f64>, DiscriminatorError> {
        match self {
            Discriminators::Separate { style, .. } => style.train(records, vocab, epochs, config, seed),
            Discriminators::Shared(s) => s.train_style(records, vocab, epochs, config, seed),
        }
    }

    pub fn train_source(
        &mut self,
        human: &[NewsRecord],
        machine: &[NewsRecord],
        vocab: &Vocab,
        epochs: usize,
        config: &DmConfig,
        seed: u64,
    ) -> Result<Vec<f64>, DiscriminatorError> {
        match self {
            Discriminators::Separate { source, .. } => source.train(human, machine, vocab, epochs, config, seed),
            Discriminators::Shared(s) => s.train_source(human, machine, vocab, epochs, config, seed),
        }
    }

    pub fn classify_publisher(&self, tokens: &[TokenId]) -> Result<(String, Vec<f64>), DiscriminatorError> {
        match self {
            Discriminators::Separate { style, .. } => style.classify(tokens),
            Discriminators::Shared(s) => {
                let probs = probabilities(&s.backbone, &s.style_head, tokens)?;
                Ok((s.labels.name(argmax(&probs)).unwrap_or_default().to_string(), probs))
            }
        }
    }

    pub fn detect_source(&self, tokens: &[TokenId]) -> Result<(Source, f64), DiscriminatorError> {
        match self {
            Discriminators::Separate { source, .. } => source.detect(tokens),
            Discriminators::Shared(s) => detect_with(&s.backbone, &s.source_head, tokens),
        }
    }

    /// Writes `style_dir` and `source_dir`, each with backbone, head and a
    /// manifest carrying the label index and the shared flag.
    pub fn save(&self, style_dir: &Path, source_dir: &Path) -> Result<(), CheckpointError> {
        let (sb, sh, qb, qh, labels, shared) = match self {
            Discriminators::Separate { style, source } => (
                &style.model.backbone,
                &style.model.head,
                &source.model.backbone,
                &source.model.head,
                &style.labels,
                false,
            ),
            Discriminators::Shared(s) => (&s.backbone, &s.style_head, &s.backbone, &s.source_head, &s.labels, true),
        };
        for (dir, backbone, head, role, names) in [
            (style_dir, sb, sh, "style", labels.names().to_vec()),
            (source_dir, qb, qh, "source", vec!["H".to_string(), "M".to_string()]),
        ] {
            backbone.save(dir)?;
            head.save(dir, "head")?;
            checkpoint::write_json(
                &dir.join("manifest.json"),
                &DiscriminatorManifest {
                    role: role.into(),
                    shared,
                    labels: names,
                },
            )?;
        }
        Ok(())
    }

    pub fn load(style_dir: &Path, source_dir: &Path, table: &Arc<EmbeddingTable>) -> Result<Self, CheckpointError> {
        let m: DiscriminatorManifest = checkpoint::read_json(&style_dir.join("manifest.json"))?;
        let labels = LabelIndex::new(m.labels);
        let style_backbone = DmBackbone::load(style_dir, table)?;
        let style_head = DmHead::load(style_dir, "head")?;
        let source_head = DmHead::load(source_dir, "head")?;
        if m.shared {
            return Ok(Discriminators::Shared(SharedDiscriminators {
                backbone: style_backbone,
                style_head,
                labels,
                source_head,
            }));
        }
        let source_backbone = DmBackbone::load(source_dir, table)?;
        Ok(Discriminators::Separate {
            style: StyleDiscriminator {
                model: DmModel {
                    backbone: style_backbone,
                    head: style_head,
                },
                labels,
            },
            source: SourceDiscriminator {
                model: DmModel {
                    backbone: source_backbone,
                    head: source_head,
                },
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_table(rows: usize, width: usize, seed: u64) -> Arc<EmbeddingTable> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * width).map(|_| r.random_range(-0.5..0.5)).collect();
        Arc::new(EmbeddingTable::new(rows, width, data, 0).unwrap())
    }

    fn rec(id: &str, publisher: &str, content: &str, source: Source) -> NewsRecord {
        NewsRecord {
            id: id.into(),
            publisher: publisher.into(),
            highlight: "h".into(),
            content: content.into(),
            source,
            split: Split::Train,
        }
    }

    fn config() -> DmConfig {
        DmConfig {
            dropout: 0.0,
            learning_rate: 0.05,
            batch_size: 4,
            ..DmConfig::default()
        }
    }

    /// Two publishers with disjoint vocabularies.
    fn separable(n: usize, seed: u64) -> (Vocab, Vec<NewsRecord>) {
        let a_words = ["red", "apple", "fire", "brick", "rose"];
        let b_words = ["blue", "ocean", "ice", "sky", "whale"];
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut recs = Vec::new();
        for i in 0..n {
            let (p, words) = if i % 2 == 0 { ("A", &a_words) } else { ("B", &b_words) };
            let len = r.random_range(4..9);
            let content: Vec<&str> = (0..len).map(|_| words[r.random_range(0..5)]).collect();
            recs.push(rec(&format!("d{i}"), p, &content.join(" "), Source::Human));
        }
        let vocab = Vocab::build(a_words.iter().chain(&b_words).copied());
        (vocab, recs)
    }

    #[test]
    fn label_index_round_trips() {
        let li = LabelIndex::new(["b", "a", "c", "a"]);
        assert_eq!(li.len(), 3);
        for n in ["a", "b", "c"] {
            assert_eq!(li.name(li.index(n).unwrap()), Some(n));
        }
        assert_eq!(li.index("zz"), None);
    }

    #[test]
    fn separable_publishers_are_learned() {
        let (vocab, recs) = separable(40, 1);
        let mut d = StyleDiscriminator::new(
            random_table(vocab.len(), 8, 2),
            LabelIndex::from_records(&recs),
            &config(),
            3,
        );
        d.train(&recs, &vocab, 10, &config(), 4).unwrap();
        // oracle: exhaustive evaluation over the training corpus
        for r in &recs {
            let (name, probs) = d.classify(&vocab.encode_content(&r.content)).unwrap();
            assert_eq!(name, r.publisher, "{}", r.content);
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_epochs_change_nothing() {
        let (vocab, recs) = separable(6, 1);
        let mut d = StyleDiscriminator::new(
            random_table(vocab.len(), 4, 2),
            LabelIndex::from_records(&recs),
            &config(),
            3,
        );
        let before = d.clone();
        assert!(d.train(&recs, &vocab, 0, &config(), 4).unwrap().is_empty());
        assert_eq!(d, before);
        let mut s = SourceDiscriminator::new(random_table(vocab.len(), 4, 2), &config(), 1);
        let before = s.clone();
        s.train(&recs[..3], &recs[3..], &vocab, 0, &config(), 0).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn unknown_publisher_names_record() {
        let (vocab, mut recs) = separable(4, 1);
        let mut d = StyleDiscriminator::new(
            random_table(vocab.len(), 4, 2),
            LabelIndex::from_records(&recs),
            &config(),
            3,
        );
        recs[2].publisher = "Z".into();
        match d.train(&recs, &vocab, 1, &config(), 0) {
            Err(DiscriminatorError::UnknownPublisher { id, .. }) => assert_eq!(id, "d2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn uniform_head_gives_uniform_probabilities() {
        let labels = LabelIndex::new(["a", "b", "c", "d", "e"]);
        let mut d = StyleDiscriminator::new(random_table(10, 4, 2), labels, &config(), 3);
        d.model.head.weight.iter_mut().for_each(|w| *w = 0.0);
        let (name, probs) = d.classify(&[3, 4, 5]).unwrap();
        assert!(probs.iter().all(|p| (p - 0.2).abs() < 1e-12));
        assert_eq!(name, "a");
    }

    #[test]
    fn unknown_only_document_is_classified() {
        let (vocab, recs) = separable(4, 1);
        let d = StyleDiscriminator::new(
            random_table(vocab.len(), 4, 2),
            LabelIndex::from_records(&recs),
            &config(),
            3,
        );
        let toks = vocab.encode_content("never seen words here");
        assert!(toks.iter().all(|&t| t == Vocab::UNKNOWN));
        let (_, probs) = d.classify(&toks).unwrap();
        assert!(probs.iter().all(|p| p.is_finite()));
        assert!(matches!(d.classify(&[]), Err(DiscriminatorError::EmptyInput)));
    }

    #[test]
    fn symmetric_source_head_ties_to_human() {
        let mut s = SourceDiscriminator::new(random_table(6, 4, 2), &config(), 1);
        s.model.head.weight.iter_mut().for_each(|w| *w = 0.0);
        assert_eq!(s.detect(&[2, 3]).unwrap(), (Source::Human, 0.5));
        assert_eq!(s.detect(&[2]).unwrap().0, Source::Human);
    }

    #[test]
    fn source_training_requires_both_classes() {
        let (vocab, recs) = separable(4, 1);
        let mut s = SourceDiscriminator::new(random_table(vocab.len(), 4, 2), &config(), 1);
        assert!(matches!(
            s.train(&recs, &[], &vocab, 1, &config(), 0),
            Err(DiscriminatorError::EmptyClass(Source::Machine))
        ));
    }

    fn pair(table: Arc<EmbeddingTable>) -> (StyleDiscriminator, SourceDiscriminator) {
        (
            StyleDiscriminator::new(table.clone(), LabelIndex::new(["A", "B"]), &config(), 1),
            SourceDiscriminator::new(table, &config(), 2),
        )
    }

    #[test]
    fn shared_alpha_aliases_and_heads_stay_isolated() {
        let (vocab, recs) = separable(8, 1);
        let table = random_table(vocab.len(), 4, 3);
        let (style, source) = pair(table.clone());
        let mut shared = make_shared_backbone(style, source).unwrap();
        let alpha0 = shared.source_view().model.backbone.alpha_raw;
        shared.train_style(&recs, &vocab, 1, &config(), 0).unwrap();
        assert_ne!(shared.source_view().model.backbone.alpha_raw, alpha0);

        let style_w = shared.style_head.weight.clone();
        let alpha1 = shared.backbone.alpha_raw;
        shared
            .train_source(&recs[..4], &recs[4..], &vocab, 1, &config(), 0)
            .unwrap();
        assert_eq!(shared.style_head.weight, style_w);
        assert_ne!(shared.backbone.alpha_raw, alpha1);

        // unshared control: the other discriminator is untouched
        let (mut style, source) = pair(table);
        let source_before = source.clone();
        style.train(&recs, &vocab, 1, &config(), 0).unwrap();
        assert_eq!(source, source_before);
    }

    #[test]
    fn incompatible_backbones_are_rejected() {
        let (style, _) = pair(random_table(5, 4, 1));
        let (_, source) = pair(random_table(5, 4, 2));
        assert!(matches!(
            make_shared_backbone(style, source),
            Err(DiscriminatorError::IncompatibleBackbones(_))
        ));
        let (style, mut source) = pair(random_table(5, 4, 1));
        source.model.backbone.hops = 2;
        assert!(make_shared_backbone(style, source).is_err());
    }

    #[test]
    fn save_and_load_both_variants() {
        let table = random_table(6, 3, 1);
        for shared in [false, true] {
            let cfg = DmConfig {
                shared_backbone: shared,
                ..config()
            };
            let d = Discriminators::new(table.clone(), LabelIndex::new(["A", "B", "C"]), &cfg, 4);
            let dir = tempfile::tempdir().unwrap();
            d.save(&dir.path().join("s"), &dir.path().join("q")).unwrap();
            let back = Discriminators::load(&dir.path().join("s"), &dir.path().join("q"), &table).unwrap();
            assert_eq!(back, d);
            assert_eq!(back.is_shared(), shared);
        }
    }

    #[test]
    fn training_is_seed_deterministic() {
        let (vocab, recs) = separable(12, 1);
        let run = || {
            let mut d = StyleDiscriminator::new(
                random_table(vocab.len(), 4, 2),
                LabelIndex::from_records(&recs),
                &DmConfig::default(),
                3,
            );
            d.train(&recs, &vocab, 3, &DmConfig::default(), 9).unwrap();
            d
        };
        assert_eq!(run(), run());
    }
}
