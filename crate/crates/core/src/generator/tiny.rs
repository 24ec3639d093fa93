//! Small causal language model used at desk scale.
//!
//! Each prediction conditions on the two previous tokens and on the running
//! mean of every earlier token embedding, so the publisher tokens at the start
//! of the prompt stay visible for the whole continuation:
//!
//! ```text
//! z_t = W1 e(y_{t-1}) + W2 e(y_{t-2}) + Wc mean(e(y_0..y_{t-1})) + b_h
//! logits_t = Wo tanh(z_t) + b_o
//! ```

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GeneratorError, LanguageModel};
use crate::checkpoint::{self, CheckpointError};
use crate::rng;
use crate::vocab::{SpecialTokens, TokenId, Vocab};
use crate::wordgraph::EmbeddingTable;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmConfig {
    pub embedding_width: usize,
    pub hidden_width: usize,
    /// Half-width of the uniform initialisation of token embeddings.
    pub embedding_init: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            embedding_width: 768,
            hidden_width: 64,
            embedding_init: 0.3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Layout {
    vocab: usize,
    d: usize,
    h: usize,
}

impl Layout {
    fn embed(&self) -> std::ops::Range<usize> {
        0..self.vocab * self.d
    }
    fn w_prev1(&self) -> std::ops::Range<usize> {
        let s = self.embed().end;
        s..s + self.h * self.d
    }
    fn w_prev2(&self) -> std::ops::Range<usize> {
        let s = self.w_prev1().end;
        s..s + self.h * self.d
    }
    fn w_ctx(&self) -> std::ops::Range<usize> {
        let s = self.w_prev2().end;
        s..s + self.h * self.d
    }
    fn b_hidden(&self) -> std::ops::Range<usize> {
        let s = self.w_ctx().end;
        s..s + self.h
    }
    fn w_out(&self) -> std::ops::Range<usize> {
        let s = self.b_hidden().end;
        s..s + self.vocab * self.h
    }
    fn b_out(&self) -> std::ops::Range<usize> {
        let s = self.w_out().end;
        s..s + self.vocab
    }
    fn total(&self) -> usize {
        self.b_out().end
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TinyLm {
    vocab: Vocab,
    config: LmConfig,
    layout: Layout,
    params: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TinyState {
    prev1: Option<TokenId>,
    prev2: Option<TokenId>,
    sum: Vec<f64>,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    model: String,
    embedding_width: usize,
    hidden_width: usize,
    embedding_init: f64,
    vocab_size: usize,
    vocab_hash: String,
    special_tokens: SpecialTokens,
    parameter_count: usize,
    parameter_hash: String,
    training_steps: u64,
}

fn matvec_add(out: &mut [f64], m: &[f64], x: &[f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn matvec_t_add(out: &mut [f64], m: &[f64], y: &[f64]) {
    let cols = out.len();
    for (row, &yi) in m.chunks_exact(cols).zip(y) {
        if yi != 0.0 {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
    }
}

fn outer_add(g: &mut [f64], y: &[f64], x: &[f64]) {
    let cols = x.len();
    for (row, &yi) in g.chunks_exact_mut(cols).zip(y) {
        if yi != 0.0 {
            for (o, xj) in row.iter_mut().zip(x) {
                *o += yi * xj;
            }
        }
    }
}

pub(crate) fn log_softmax_at(logits: &[f64], idx: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits[idx] - lse
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

impl TinyLm {
    /// `vocab` must already carry the prompt control tokens.
    pub fn new(vocab: Vocab, config: LmConfig, seed: u64) -> Self {
        let layout = Layout {
            vocab: vocab.len(),
            d: config.embedding_width,
            h: config.hidden_width,
        };
        let mut params = vec![0.0; layout.total()];
        let mut r = rng::stream(seed, &[rng::tag("tiny_lm_init")]);
        let a = config.embedding_init;
        for p in &mut params[layout.embed()] {
            *p = r.random_range(-a..a);
        }
        let in_scale = 1.0 / (layout.d as f64).sqrt();
        for range in [layout.w_prev1(), layout.w_prev2(), layout.w_ctx()] {
            for p in &mut params[range] {
                *p = r.random_range(-in_scale..in_scale);
            }
        }
        let out_scale = 1.0 / (layout.h as f64).sqrt();
        for p in &mut params[layout.w_out()] {
            *p = r.random_range(-out_scale..out_scale);
        }
        Self {
            vocab,
            config,
            layout,
            params,
        }
    }

    pub fn config(&self) -> &LmConfig {
        &self.config
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    fn emb(&self, id: TokenId) -> &[f64] {
        let d = self.layout.d;
        let id = if (id as usize) < self.layout.vocab {
            id as usize
        } else {
            Vocab::UNKNOWN as usize
        };
        &self.params[self.layout.embed()][id * d..(id + 1) * d]
    }

    fn hidden(&self, prev1: Option<TokenId>, prev2: Option<TokenId>, ctx: Option<&[f64]>) -> Vec<f64> {
        let l = self.layout;
        let mut z = self.params[l.b_hidden()].to_vec();
        if let Some(t) = prev1 {
            matvec_add(&mut z, &self.params[l.w_prev1()], self.emb(t));
        }
        if let Some(t) = prev2 {
            matvec_add(&mut z, &self.params[l.w_prev2()], self.emb(t));
        }
        if let Some(c) = ctx {
            matvec_add(&mut z, &self.params[l.w_ctx()], c);
        }
        z.iter_mut().for_each(|v| *v = v.tanh());
        z
    }

    fn logits(&self, h: &[f64]) -> Vec<f64> {
        let l = self.layout;
        let mut out = self.params[l.b_out()].to_vec();
        matvec_add(&mut out, &self.params[l.w_out()], h);
        out
    }

    pub fn save(&self, dir: &Path, training_steps: u64) -> Result<(), CheckpointError> {
        checkpoint::create_dir(dir)?;
        let special_tokens = self.vocab.special_literals().cloned().unwrap_or_default();
        let blob = checkpoint::f64s_to_bytes(&self.params);
        let manifest = Manifest {
            format_version: checkpoint::FORMAT_VERSION,
            model: "tiny-context-lm".into(),
            embedding_width: self.config.embedding_width,
            hidden_width: self.config.hidden_width,
            embedding_init: self.config.embedding_init,
            vocab_size: self.vocab.len(),
            vocab_hash: self.vocab.hash(),
            special_tokens,
            parameter_count: self.params.len(),
            parameter_hash: checkpoint::sha256_hex(&blob),
            training_steps,
        };
        checkpoint::write_bytes(&dir.join("params.bin"), &blob)?;
        checkpoint::write_bytes(&dir.join("vocab.txt"), self.vocab.to_text().as_bytes())?;
        checkpoint::write_json(&dir.join("manifest.json"), &manifest)
    }

    /// Returns the model and the recorded training-step count.
    pub fn load(dir: &Path) -> Result<(Self, u64), CheckpointError> {
        let manifest_path = dir.join("manifest.json");
        let manifest: Manifest = checkpoint::read_json(&manifest_path)?;
        let vocab_text = checkpoint::read_string(&dir.join("vocab.txt"))?;
        let vocab = Vocab::from_text(&vocab_text, Some(&manifest.special_tokens));
        if vocab.hash() != manifest.vocab_hash {
            return Err(CheckpointError::corrupt(&manifest_path, "vocabulary hash mismatch"));
        }
        let blob_path = dir.join("params.bin");
        let blob = checkpoint::read_bytes(&blob_path)?;
        if checkpoint::sha256_hex(&blob) != manifest.parameter_hash {
            return Err(CheckpointError::corrupt(&blob_path, "parameter hash mismatch"));
        }
        let params = checkpoint::bytes_to_f64s(&blob)
            .ok_or_else(|| CheckpointError::corrupt(&blob_path, "truncated parameter blob"))?;
        let config = LmConfig {
            embedding_width: manifest.embedding_width,
            hidden_width: manifest.hidden_width,
            embedding_init: manifest.embedding_init,
        };
        let layout = Layout {
            vocab: vocab.len(),
            d: config.embedding_width,
            h: config.hidden_width,
        };
        if params.len() != layout.total() {
            return Err(CheckpointError::corrupt(
                &blob_path,
                "parameter count does not match manifest",
            ));
        }
        Ok((
            Self {
                vocab,
                config,
                layout,
                params,
            },
            manifest.training_steps,
        ))
    }
}

impl LanguageModel for TinyLm {
    type State = TinyState;

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn embedding_table(&self) -> EmbeddingTable {
        EmbeddingTable::new(
            self.layout.vocab,
            self.layout.d,
            self.params[self.layout.embed()].to_vec(),
            Vocab::UNKNOWN,
        )
        .expect("layout matches table shape")
    }

    fn begin(&self) -> TinyState {
        TinyState {
            prev1: None,
            prev2: None,
            sum: vec![0.0; self.layout.d],
            count: 0,
        }
    }

    fn push(&self, state: &mut TinyState, token: TokenId) {
        for (s, e) in state.sum.iter_mut().zip(self.emb(token)) {
            *s += e;
        }
        state.count += 1;
        state.prev2 = state.prev1;
        state.prev1 = Some(token);
    }

    fn next_logits(&self, state: &TinyState) -> Vec<f64> {
        let ctx: Option<Vec<f64>> =
            (state.count > 0).then(|| state.sum.iter().map(|s| s / state.count as f64).collect());
        let h = self.hidden(state.prev1, state.prev2, ctx.as_deref());
        self.logits(&h)
    }

    fn parameters(&self) -> &[f64] {
        &self.params
    }

    fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn nll_and_grad(&self, tokens: &[TokenId], grad: &mut [f64]) -> Result<f64, GeneratorError> {
        let l = self.layout;
        let (d, h_dim) = (l.d, l.h);
        assert_eq!(grad.len(), l.total());
        let n = tokens.len();
        if n < 2 {
            return Ok(0.0);
        }
        let tok = |i: usize| -> usize {
            let t = tokens[i] as usize;
            if t < l.vocab {
                t
            } else {
                Vocab::UNKNOWN as usize
            }
        };
        let mut nll = 0.0;
        let mut sum = self.emb(tokens[0]).to_vec();
        // ctx_grad[t] holds dL/dctx_t / t, to be spread over e_0..e_{t-1}.
        let mut ctx_grad = vec![0.0; n * d];
        let mut embed_grad_direct = vec![0.0; n * d];
        for t in 1..n {
            let ctx: Vec<f64> = sum.iter().map(|s| s / t as f64).collect();
            let prev2 = (t >= 2).then(|| tokens[t - 2]);
            let h = self.hidden(Some(tokens[t - 1]), prev2, Some(&ctx));
            let logits = self.logits(&h);
            let target = tok(t);
            nll -= log_softmax_at(&logits, target);

            let mut dlogits = softmax(&logits);
            dlogits[target] -= 1.0;

            outer_add(&mut grad[l.w_out()], &dlogits, &h);
            for (g, dl) in grad[l.b_out()].iter_mut().zip(&dlogits) {
                *g += dl;
            }
            let mut dh = vec![0.0; h_dim];
            matvec_t_add(&mut dh, &self.params[l.w_out()], &dlogits);
            let dz: Vec<f64> = dh.iter().zip(&h).map(|(g, a)| g * (1.0 - a * a)).collect();
            for (g, v) in grad[l.b_hidden()].iter_mut().zip(&dz) {
                *g += v;
            }
            outer_add(&mut grad[l.w_prev1()], &dz, self.emb(tokens[t - 1]));
            matvec_t_add(
                &mut embed_grad_direct[(t - 1) * d..t * d],
                &self.params[l.w_prev1()],
                &dz,
            );
            if t >= 2 {
                outer_add(&mut grad[l.w_prev2()], &dz, self.emb(tokens[t - 2]));
                matvec_t_add(
                    &mut embed_grad_direct[(t - 2) * d..(t - 1) * d],
                    &self.params[l.w_prev2()],
                    &dz,
                );
            }
            outer_add(&mut grad[l.w_ctx()], &dz, &ctx);
            let cg = &mut ctx_grad[t * d..(t + 1) * d];
            matvec_t_add(cg, &self.params[l.w_ctx()], &dz);
            cg.iter_mut().for_each(|v| *v /= t as f64);

            for (s, e) in sum.iter_mut().zip(self.emb(tokens[t])) {
                *s += e;
            }
        }
        // e_i receives the context gradient of every later position t > i.
        let mut suffix = vec![0.0; d];
        let embed = &mut grad[l.embed()];
        for i in (0..n - 1).rev() {
            for (s, c) in suffix.iter_mut().zip(&ctx_grad[(i + 1) * d..(i + 2) * d]) {
                *s += c;
            }
            let row = &mut embed[tok(i) * d..(tok(i) + 1) * d];
            for ((r, s), direct) in row.iter_mut().zip(&suffix).zip(&embed_grad_direct[i * d..(i + 1) * d]) {
                *r += s + direct;
            }
        }
        Ok(nll)
    }
}
