use std::sync::Arc;

use crate::rng;
use crate::vocab::Vocab;
use crate::wordgraph::EmbeddingTable;

/// Maps text to vectors. `embed_tokens` gives one vector per token;
/// `embed` gives a fixed-width text vector.
pub trait Embedder {
    fn width(&self) -> usize;

    fn embed_tokens(&self, text: &str) -> Vec<Vec<f64>>;

    /// Mean of the token vectors; zeros for empty text.
    fn embed(&self, text: &str) -> Vec<f64> {
        let tokens = self.embed_tokens(text);
        let mut out = vec![0.0; self.width()];
        if tokens.is_empty() {
            return out;
        }
        for t in &tokens {
            for (o, x) in out.iter_mut().zip(t) {
                *o += x;
            }
        }
        let n = tokens.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
        out
    }
}

/// Rows of a language model's token embedding table.
#[derive(Clone, Debug)]
pub struct MeanTokenEmbedder {
    pub vocab: Vocab,
    pub table: Arc<EmbeddingTable>,
}

impl MeanTokenEmbedder {
    pub fn new(vocab: Vocab, table: Arc<EmbeddingTable>) -> Self {
        Self { vocab, table }
    }
}

impl Embedder for MeanTokenEmbedder {
    fn width(&self) -> usize {
        self.table.width()
    }

    fn embed_tokens(&self, text: &str) -> Vec<Vec<f64>> {
        self.vocab
            .encode_content(text)
            .into_iter()
            .map(|t| self.table.row(t).to_vec())
            .collect()
    }
}

/// Model-free fallback: each distinct word gets a fixed pseudo-random
/// vector derived from its hash.
#[derive(Clone, Copy, Debug)]
pub struct HashingEmbedder {
    pub width: usize,
    pub seed: u64,
}

impl HashingEmbedder {
    pub fn new(width: usize, seed: u64) -> Self {
        Self { width, seed }
    }

    pub fn word_vector(&self, word: &str) -> Vec<f64> {
        use rand::Rng;
        let mut r = rng::stream(self.seed, &[rng::tag("hash_embed"), rng::tag(word)]);
        let scale = 1.0 / (self.width as f64).sqrt();
        (0..self.width).map(|_| r.random_range(-1.0..1.0) * scale).collect()
    }
}

impl Embedder for HashingEmbedder {
    fn width(&self) -> usize {
        self.width
    }

    fn embed_tokens(&self, text: &str) -> Vec<Vec<f64>> {
        text.split_whitespace().map(|w| self.word_vector(w)).collect()
    }
}
