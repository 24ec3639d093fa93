//! Evaluation: fluency (divergence-curve area and frontier integral), content
//! preservation (BLEU and embedding mover similarity), style adherence,
//! classification metrics, spelling-style counts and reports.

mod classification;
mod content;
mod embed;
mod fluency;
mod report;
mod spelling;
mod style;

use thiserror::Error;

pub use classification::{classification_metrics, ClassificationReport};
pub use content::{
    content_scores, corpus_bleu, exact_mover_distance, greedy_mover_distance, mover_distance, mover_similarity,
    ContentScores, Triple, BLEU_SMOOTHING, EXACT_MOVER_LIMIT,
};
pub use embed::{Embedder, HashingEmbedder, MeanTokenEmbedder};
pub use fluency::{
    divergence_curve, fluency_from_embeddings, fluency_scores, frontier_integral, histograms, kl_divergence, kmeans,
    mauve_area, FluencyConfig, FluencyScores,
};
pub use report::{build_report, read_report, write_report, EvalReport, MetricInputs};
pub use spelling::{spelling_style_counts, Lexicon, SpellingCounts};
pub use style::{style_adherence, DmStyleClassifier, StyleClassifier};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least {needed} texts per set, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("reference {index} is empty")]
    EmptyReference { index: usize },
    #[error("no inputs to evaluate")]
    EmptyInput,
    #[error("{predictions} predictions for {gold} gold labels")]
    LengthMismatch { predictions: usize, gold: usize },
    #[error("style classifier has not been trained")]
    UntrainedClassifier,
    #[error("{field} = {value} is outside its valid range")]
    OutOfRange { field: String, value: f64 },
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("classifier failed: {0}")]
    Classifier(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
