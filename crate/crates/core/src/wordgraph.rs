//! Inductive word-graph encoder shared by the style and source discriminators.
//!
//! A token sequence becomes an undirected graph with one node per distinct
//! token and an edge between every pair of adjacent (different) tokens. Node
//! features start from a shared embedding table and are refined by `p`
//! synchronous rounds of
//!
//! ```text
//! r_v <- (1 - alpha) * max{ r_u : u in n(v) } + alpha * r_v
//! ```
//!
//! (element-wise max, zero for an empty neighbourhood). The article vector is
//! the sum of node vectors over token occurrences, followed by a linear head.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checkpoint::{self, CheckpointError};
use crate::optim::{AdamConfig, AdamState, DecayMode};
use crate::vocab::TokenId;

#[derive(Debug, Error, PartialEq)]
pub enum DmError {
    #[error("cannot build a word graph from an empty sequence")]
    EmptySequence,
    #[error("hop count must be >= 1")]
    InvalidHops,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("label {label} is out of range for {classes} classes")]
    InvalidLabel { label: usize, classes: usize },
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("empty training batch")]
    EmptyBatch,
    #[error("embedding table data has {got} values, expected {expected}")]
    TableShape { expected: usize, got: usize },
}

/// Row-major token embedding table. Ids past the last row resolve to the
/// unknown-token row.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    unknown: TokenId,
}

impl EmbeddingTable {
    pub fn new(rows: usize, width: usize, data: Vec<f64>, unknown: TokenId) -> Result<Self, DmError> {
        if data.len() != rows * width {
            return Err(DmError::TableShape {
                expected: rows * width,
                got: data.len(),
            });
        }
        Ok(Self {
            rows,
            width,
            data,
            unknown,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn resolve(&self, id: TokenId) -> usize {
        if (id as usize) < self.rows {
            id as usize
        } else {
            self.unknown as usize
        }
    }

    pub fn row(&self, id: TokenId) -> &[f64] {
        let r = self.resolve(id);
        &self.data[r * self.width..(r + 1) * self.width]
    }

    pub fn hash(&self) -> String {
        checkpoint::sha256_hex(&checkpoint::f64s_to_bytes(&self.data))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordGraph {
    /// Distinct token ids, ascending.
    nodes: Vec<TokenId>,
    /// Occurrences of each node in the sequence.
    counts: Vec<usize>,
    /// Neighbour node indices, ascending.
    neighbors: Vec<Vec<usize>>,
    occurrences: Vec<TokenId>,
    hops: usize,
}

impl WordGraph {
    pub fn nodes(&self) -> &[TokenId] {
        &self.nodes
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn occurrences(&self) -> &[TokenId] {
        &self.occurrences
    }

    pub fn hops(&self) -> usize {
        self.hops
    }

    pub fn node_index(&self, token: TokenId) -> Option<usize> {
        self.nodes.binary_search(&token).ok()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, a: TokenId, b: TokenId) -> bool {
        match (self.node_index(a), self.node_index(b)) {
            (Some(i), Some(j)) => self.neighbors[i].binary_search(&j).is_ok(),
            _ => false,
        }
    }

    /// Undirected edges as `(token, token)` pairs with the smaller id first.
    pub fn edges(&self) -> Vec<(TokenId, TokenId)> {
        let mut out = Vec::new();
        for (i, ns) in self.neighbors.iter().enumerate() {
            for &j in ns {
                if i < j {
                    out.push((self.nodes[i], self.nodes[j]));
                }
            }
        }
        out
    }
}

pub fn build_graph(tokens: &[TokenId], hops: usize) -> Result<WordGraph, DmError> {
    if tokens.is_empty() {
        return Err(DmError::EmptySequence);
    }
    if hops == 0 {
        return Err(DmError::InvalidHops);
    }
    let mut count_map: BTreeMap<TokenId, usize> = BTreeMap::new();
    for &t in tokens {
        *count_map.entry(t).or_default() += 1;
    }
    let nodes: Vec<TokenId> = count_map.keys().copied().collect();
    let counts: Vec<usize> = count_map.values().copied().collect();
    let idx = |t: TokenId| nodes.binary_search(&t).expect("token is a node");
    let mut neighbors = vec![Vec::new(); nodes.len()];
    for pair in tokens.windows(2) {
        if pair[0] != pair[1] {
            let (a, b) = (idx(pair[0]), idx(pair[1]));
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
    }
    for ns in &mut neighbors {
        ns.sort_unstable();
        ns.dedup();
    }
    Ok(WordGraph {
        nodes,
        counts,
        neighbors,
        occurrences: tokens.to_vec(),
        hops,
    })
}

const NO_NEIGHBOR: u32 = u32::MAX;

/// Intermediate values of the message-passing rounds, kept for backprop.
struct Propagation {
    /// `rounds[k]` is the flat `n x d` node matrix after `k` rounds.
    rounds: Vec<Vec<f64>>,
    /// `maxes[k]` / `argmax[k]`: neighbourhood max feeding round `k + 1`.
    maxes: Vec<Vec<f64>>,
    argmax: Vec<Vec<u32>>,
}

fn propagate(graph: &WordGraph, table: &EmbeddingTable, alpha: f64) -> Propagation {
    let n = graph.nodes.len();
    let d = table.width;
    let mut r0 = Vec::with_capacity(n * d);
    for &t in &graph.nodes {
        r0.extend_from_slice(table.row(t));
    }
    let mut rounds = vec![r0];
    let mut maxes = Vec::with_capacity(graph.hops);
    let mut argmax = Vec::with_capacity(graph.hops);
    for _ in 0..graph.hops {
        let prev = rounds.last().expect("at least one round");
        let mut m = vec![0.0; n * d];
        let mut am = vec![NO_NEIGHBOR; n * d];
        for v in 0..n {
            let ns = &graph.neighbors[v];
            if ns.is_empty() {
                continue;
            }
            for j in 0..d {
                let mut best = ns[0];
                for &u in &ns[1..] {
                    if prev[u * d + j] > prev[best * d + j] {
                        best = u;
                    }
                }
                m[v * d + j] = prev[best * d + j];
                am[v * d + j] = best as u32;
            }
        }
        let next: Vec<f64> = m
            .iter()
            .zip(prev)
            .map(|(mv, pv)| (1.0 - alpha) * mv + alpha * pv)
            .collect();
        maxes.push(m);
        argmax.push(am);
        rounds.push(next);
    }
    Propagation { rounds, maxes, argmax }
}

/// Node representations after `graph.hops()` aggregation rounds, indexed
/// like [`WordGraph::nodes`].
pub fn aggregate(graph: &WordGraph, table: &EmbeddingTable, alpha: f64) -> Vec<Vec<f64>> {
    let d = table.width;
    let prop = propagate(graph, table, alpha);
    prop.rounds
        .last()
        .expect("rounds")
        .chunks_exact(d)
        .map(<[f64]>::to_vec)
        .collect()
}

/// Sum of node representations over token occurrences.
pub fn pool(graph: &WordGraph, node_reps: &[Vec<f64>]) -> Vec<f64> {
    let d = node_reps.first().map_or(0, Vec::len);
    let mut out = vec![0.0; d];
    for (rep, &c) in node_reps.iter().zip(&graph.counts) {
        for (o, r) in out.iter_mut().zip(rep) {
            *o += c as f64 * r;
        }
    }
    out
}

fn pool_flat(graph: &WordGraph, flat: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for (rep, &c) in flat.chunks_exact(d).zip(&graph.counts) {
        for (o, r) in out.iter_mut().zip(rep) {
            *o += c as f64 * r;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropoutPlacement {
    /// On the class logits, after the linear layer.
    Logits,
    /// On the pooled article vector, before the linear layer.
    Representation,
}

/// Linear classification head `logits = W'^T r + b'` with `W'` of shape
/// `d_r x d_c`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DmHead {
    pub d_r: usize,
    pub d_c: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub dropout: f64,
    pub placement: DropoutPlacement,
    pub adam: AdamState,
}

impl DmHead {
    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng>(d_r: usize, d_c: usize, dropout: f64, placement: DropoutPlacement, rng: &mut R) -> Self {
        let limit = (6.0 / (d_r + d_c) as f64).sqrt();
        let weight = (0..d_r * d_c).map(|_| rng.random_range(-limit..limit)).collect();
        Self::from_parts(d_r, d_c, weight, vec![0.0; d_c], dropout, placement)
    }

    pub fn from_parts(
        d_r: usize,
        d_c: usize,
        weight: Vec<f64>,
        bias: Vec<f64>,
        dropout: f64,
        placement: DropoutPlacement,
    ) -> Self {
        assert_eq!(weight.len(), d_r * d_c);
        assert_eq!(bias.len(), d_c);
        Self {
            d_r,
            d_c,
            weight,
            bias,
            dropout,
            placement,
            adam: AdamState::new(d_r * d_c + d_c),
        }
    }
}

fn affine(r: &[f64], head: &DmHead) -> Vec<f64> {
    let mut out = head.bias.clone();
    for (j, &rj) in r.iter().enumerate() {
        let row = &head.weight[j * head.d_c..(j + 1) * head.d_c];
        for (o, w) in out.iter_mut().zip(row) {
            *o += w * rj;
        }
    }
    out
}

/// Inference-time logits (no dropout).
pub fn predict(r_n: &[f64], head: &DmHead) -> Result<Vec<f64>, DmError> {
    if r_n.len() != head.d_r {
        return Err(DmError::DimensionMismatch {
            expected: head.d_r,
            got: r_n.len(),
        });
    }
    Ok(affine(r_n, head))
}

fn dropout_mask<R: Rng>(len: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    let keep = 1.0 - rate;
    (0..len)
        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect()
}

/// Training-time logits: dropout at the head's configured placement.
pub fn predict_train<R: Rng>(r_n: &[f64], head: &DmHead, rng: &mut R) -> Result<Vec<f64>, DmError> {
    if r_n.len() != head.d_r {
        return Err(DmError::DimensionMismatch {
            expected: head.d_r,
            got: r_n.len(),
        });
    }
    Ok(match head.placement {
        DropoutPlacement::Logits => {
            let z = affine(r_n, head);
            let mask = dropout_mask(z.len(), head.dropout, rng);
            z.iter().zip(&mask).map(|(a, m)| a * m).collect()
        }
        DropoutPlacement::Representation => {
            let mask = dropout_mask(r_n.len(), head.dropout, rng);
            let r: Vec<f64> = r_n.iter().zip(&mask).map(|(a, m)| a * m).collect();
            affine(&r, head)
        }
    })
}

pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|l| (l - lse).exp()).collect()
}

pub fn cross_entropy(logits: &[f64], label: usize) -> Result<f64, DmError> {
    if label >= logits.len() {
        return Err(DmError::InvalidLabel {
            label,
            classes: logits.len(),
        });
    }
    Ok(log_sum_exp(logits) - logits[label])
}

/// Mixing weight in (0, 1) and the embedding table; shared between
/// discriminators in the shared-backbone variant.
#[derive(Clone, Debug, PartialEq)]
pub struct DmBackbone {
    pub alpha_raw: f64,
    pub table: Arc<EmbeddingTable>,
    pub hops: usize,
    pub frozen: bool,
    pub alpha_adam: AdamState,
    pub embed_adam: Option<AdamState>,
}

impl DmBackbone {
    /// `alpha_raw = 0`, i.e. alpha = 0.5.
    pub fn new(table: Arc<EmbeddingTable>, hops: usize, frozen: bool) -> Self {
        let embed_adam = (!frozen).then(|| AdamState::new(table.data.len()));
        Self {
            alpha_raw: 0.0,
            table,
            hops,
            frozen,
            alpha_adam: AdamState::new(1),
            embed_adam,
        }
    }

    pub fn alpha(&self) -> f64 {
        sigmoid(self.alpha_raw)
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Gradients of a (weighted, summed) loss.
#[derive(Clone, Debug, PartialEq)]
pub struct DmGradients {
    /// d loss / d alpha_raw
    pub alpha_raw: f64,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    /// Dense table gradient; present only for trainable embeddings.
    pub embeddings: Option<Vec<f64>>,
}

impl DmGradients {
    pub fn zeros(backbone: &DmBackbone, head: &DmHead) -> Self {
        Self {
            alpha_raw: 0.0,
            weight: vec![0.0; head.weight.len()],
            bias: vec![0.0; head.bias.len()],
            embeddings: (!backbone.frozen).then(|| vec![0.0; backbone.table.data.len()]),
        }
    }

    fn is_finite(&self) -> bool {
        self.alpha_raw.is_finite()
            && self.weight.iter().chain(&self.bias).all(|g| g.is_finite())
            && self.embeddings.as_ref().is_none_or(|e| e.iter().all(|g| g.is_finite()))
    }
}

/// Logits for a graph with an explicit mixing weight (no dropout).
pub fn forward_with_alpha(
    graph: &WordGraph,
    table: &EmbeddingTable,
    alpha: f64,
    head: &DmHead,
) -> Result<Vec<f64>, DmError> {
    let prop = propagate(graph, table, alpha);
    let r_n = pool_flat(graph, prop.rounds.last().expect("rounds"), table.width);
    predict(&r_n, head)
}

/// Per-position argmax choices of every aggregation round; two parameter
/// settings with equal traces lie on the same smooth piece of the loss.
pub fn argmax_trace(graph: &WordGraph, table: &EmbeddingTable, alpha: f64) -> Vec<Vec<u32>> {
    propagate(graph, table, alpha).argmax
}

/// Loss of one example scaled by `scale`; gradients accumulate into `grads`.
/// `masks` are the dropout masks for training, `None` for a deterministic pass.
pub fn loss_and_gradients(
    graph: &WordGraph,
    label: usize,
    scale: f64,
    backbone: &DmBackbone,
    head: &DmHead,
    masks: Option<&[f64]>,
    grads: &mut DmGradients,
) -> Result<f64, DmError> {
    let table = &*backbone.table;
    let d = table.width;
    if d != head.d_r {
        return Err(DmError::DimensionMismatch {
            expected: head.d_r,
            got: d,
        });
    }
    if label >= head.d_c {
        return Err(DmError::InvalidLabel {
            label,
            classes: head.d_c,
        });
    }
    let alpha = backbone.alpha();
    let prop = propagate(graph, table, alpha);
    let r_n = pool_flat(graph, prop.rounds.last().expect("rounds"), d);

    let (rep_mask, logit_mask) = match (masks, head.placement) {
        (Some(m), DropoutPlacement::Representation) => (Some(m), None),
        (Some(m), DropoutPlacement::Logits) => (None, Some(m)),
        (None, _) => (None, None),
    };
    let r_in: Vec<f64> = match rep_mask {
        Some(m) => r_n.iter().zip(m).map(|(a, b)| a * b).collect(),
        None => r_n.clone(),
    };
    let z = affine(&r_in, head);
    let logits: Vec<f64> = match logit_mask {
        Some(m) => z.iter().zip(m).map(|(a, b)| a * b).collect(),
        None => z,
    };
    let loss = cross_entropy(&logits, label)?;

    let mut g_logits = softmax(&logits);
    g_logits[label] -= 1.0;
    g_logits.iter_mut().for_each(|g| *g *= scale);
    if let Some(m) = logit_mask {
        g_logits.iter_mut().zip(m).for_each(|(g, k)| *g *= k);
    }
    let dc = head.d_c;
    for (b, g) in grads.bias.iter_mut().zip(&g_logits) {
        *b += g;
    }
    let mut g_r = vec![0.0; d];
    for j in 0..d {
        let row = &head.weight[j * dc..(j + 1) * dc];
        let grow = &mut grads.weight[j * dc..(j + 1) * dc];
        let mut acc = 0.0;
        for c in 0..dc {
            grow[c] += r_in[j] * g_logits[c];
            acc += row[c] * g_logits[c];
        }
        g_r[j] = acc;
    }
    if let Some(m) = rep_mask {
        g_r.iter_mut().zip(m).for_each(|(g, k)| *g *= k);
    }

    // Back through pooling and the aggregation rounds.
    let n = graph.nodes.len();
    let mut g_nodes = vec![0.0; n * d];
    for v in 0..n {
        let c = graph.counts[v] as f64;
        for j in 0..d {
            g_nodes[v * d + j] = c * g_r[j];
        }
    }
    let mut g_alpha = 0.0;
    for k in (0..graph.hops).rev() {
        let prev = &prop.rounds[k];
        let m = &prop.maxes[k];
        let am = &prop.argmax[k];
        let mut g_prev = vec![0.0; n * d];
        for i in 0..n * d {
            let g = g_nodes[i];
            if g == 0.0 {
                continue;
            }
            g_alpha += g * (prev[i] - m[i]);
            g_prev[i] += alpha * g;
            let u = am[i];
            if u != NO_NEIGHBOR {
                g_prev[u as usize * d + i % d] += (1.0 - alpha) * g;
            }
        }
        g_nodes = g_prev;
    }
    grads.alpha_raw += g_alpha * alpha * (1.0 - alpha);
    if let Some(eg) = grads.embeddings.as_mut() {
        for (v, &t) in graph.nodes.iter().enumerate() {
            let r = table.resolve(t);
            for j in 0..d {
                eg[r * d + j] += g_nodes[v * d + j];
            }
        }
    }
    Ok(loss * scale)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DmOptimizer {
    pub learning_rate: f64,
    pub weight_decay: f64,
}

/// One optimizer step on the weighted mean cross-entropy of `batch`.
/// `weights[label]` rescales each example (inverse-frequency weighting);
/// `None` weighs every example equally. Returns the batch loss.
pub fn dm_train_step<R: Rng>(
    batch: &[(&WordGraph, usize)],
    backbone: &mut DmBackbone,
    head: &mut DmHead,
    optimizer: &DmOptimizer,
    class_weights: Option<&[f64]>,
    rng: &mut R,
) -> Result<f64, DmError> {
    if batch.is_empty() {
        return Err(DmError::EmptyBatch);
    }
    let w = |label: usize| class_weights.map_or(1.0, |cw| cw[label]);
    let total: f64 = batch.iter().map(|&(_, l)| w(l)).sum();
    let mut grads = DmGradients::zeros(backbone, head);
    let mut loss = 0.0;
    let training_dropout = head.dropout > 0.0;
    for &(graph, label) in batch {
        let mask = training_dropout.then(|| {
            let len = match head.placement {
                DropoutPlacement::Logits => head.d_c,
                DropoutPlacement::Representation => head.d_r,
            };
            dropout_mask(len, head.dropout, rng)
        });
        loss += loss_and_gradients(
            graph,
            label,
            w(label) / total,
            backbone,
            head,
            mask.as_deref(),
            &mut grads,
        )?;
    }
    if !grads.is_finite() {
        return Err(DmError::NonFiniteGradient);
    }
    apply_gradients(backbone, head, &grads, optimizer);
    Ok(loss)
}

pub fn apply_gradients(backbone: &mut DmBackbone, head: &mut DmHead, grads: &DmGradients, optimizer: &DmOptimizer) {
    let adam = AdamConfig::new(optimizer.weight_decay, DecayMode::L2);
    let lr = optimizer.learning_rate;
    let mut alpha = [backbone.alpha_raw];
    backbone.alpha_adam.step(&mut alpha, &[grads.alpha_raw], lr, &adam);
    backbone.alpha_raw = alpha[0];

    let mut head_params: Vec<f64> = head.weight.iter().chain(&head.bias).copied().collect();
    let head_grads: Vec<f64> = grads.weight.iter().chain(&grads.bias).copied().collect();
    head.adam.step(&mut head_params, &head_grads, lr, &adam);
    let split = head.weight.len();
    head.weight.copy_from_slice(&head_params[..split]);
    head.bias.copy_from_slice(&head_params[split..]);

    if let (Some(eg), Some(state)) = (grads.embeddings.as_ref(), backbone.embed_adam.as_mut()) {
        let table = Arc::make_mut(&mut backbone.table);
        state.step(&mut table.data, eg, lr, &adam);
    }
}

/// Backbone plus head.
#[derive(Clone, Debug, PartialEq)]
pub struct DmModel {
    pub backbone: DmBackbone,
    pub head: DmHead,
}

impl DmModel {
    pub fn logits(&self, graph: &WordGraph) -> Result<Vec<f64>, DmError> {
        forward_with_alpha(graph, &self.backbone.table, self.backbone.alpha(), &self.head)
    }
}

#[derive(Serialize, Deserialize)]
struct BackboneManifest {
    format_version: u32,
    d_r: usize,
    hops: usize,
    alpha: f64,
    alpha_raw: f64,
    frozen: bool,
    embedding_rows: usize,
    embedding_hash: String,
}

#[derive(Serialize, Deserialize)]
struct HeadManifest {
    d_r: usize,
    d_c: usize,
    dropout: f64,
    placement: DropoutPlacement,
}

impl DmBackbone {
    /// Writes `backbone.json` and `backbone.bin`; trainable tables are saved
    /// in `embeddings.bin`.
    pub fn save(&self, dir: &Path) -> Result<(), CheckpointError> {
        checkpoint::create_dir(dir)?;
        let manifest = BackboneManifest {
            format_version: checkpoint::FORMAT_VERSION,
            d_r: self.table.width,
            hops: self.hops,
            alpha: self.alpha(),
            alpha_raw: self.alpha_raw,
            frozen: self.frozen,
            embedding_rows: self.table.rows,
            embedding_hash: self.table.hash(),
        };
        let mut blob = vec![self.alpha_raw];
        blob.extend(self.alpha_adam.to_f64s());
        checkpoint::write_f64s(&dir.join("backbone.bin"), &blob)?;
        if let Some(state) = &self.embed_adam {
            checkpoint::write_f64s(&dir.join("embeddings.bin"), &self.table.data)?;
            checkpoint::write_f64s(&dir.join("embeddings_adam.bin"), &state.to_f64s())?;
        }
        checkpoint::write_json(&dir.join("backbone.json"), &manifest)
    }

    /// Frozen backbones take their table from `generator_table`, which must
    /// match the recorded hash.
    pub fn load(dir: &Path, generator_table: &Arc<EmbeddingTable>) -> Result<Self, CheckpointError> {
        let mpath = dir.join("backbone.json");
        let m: BackboneManifest = checkpoint::read_json(&mpath)?;
        let bpath = dir.join("backbone.bin");
        let blob = checkpoint::read_f64s(&bpath)?;
        let (&alpha_raw, rest) = blob
            .split_first()
            .ok_or_else(|| CheckpointError::corrupt(&bpath, "empty"))?;
        let alpha_adam =
            AdamState::from_f64s(rest).ok_or_else(|| CheckpointError::corrupt(&bpath, "bad optimizer state"))?;
        let (table, embed_adam) = if m.frozen {
            (generator_table.clone(), None)
        } else {
            let data = checkpoint::read_f64s(&dir.join("embeddings.bin"))?;
            let table = EmbeddingTable::new(m.embedding_rows, m.d_r, data, generator_table.unknown)
                .map_err(|e| CheckpointError::corrupt(dir, e.to_string()))?;
            let apath = dir.join("embeddings_adam.bin");
            let state = AdamState::from_f64s(&checkpoint::read_f64s(&apath)?)
                .ok_or_else(|| CheckpointError::corrupt(&apath, "bad optimizer state"))?;
            (Arc::new(table), Some(state))
        };
        if table.hash() != m.embedding_hash {
            return Err(CheckpointError::corrupt(&mpath, "embedding table hash mismatch"));
        }
        Ok(Self {
            alpha_raw,
            table,
            hops: m.hops,
            frozen: m.frozen,
            alpha_adam,
            embed_adam,
        })
    }
}

impl DmHead {
    pub fn save(&self, dir: &Path, name: &str) -> Result<(), CheckpointError> {
        checkpoint::create_dir(dir)?;
        let manifest = HeadManifest {
            d_r: self.d_r,
            d_c: self.d_c,
            dropout: self.dropout,
            placement: self.placement,
        };
        let mut blob: Vec<f64> = self.weight.iter().chain(&self.bias).copied().collect();
        blob.extend(self.adam.to_f64s());
        checkpoint::write_f64s(&dir.join(format!("{name}.bin")), &blob)?;
        checkpoint::write_json(&dir.join(format!("{name}.json")), &manifest)
    }

    pub fn load(dir: &Path, name: &str) -> Result<Self, CheckpointError> {
        let m: HeadManifest = checkpoint::read_json(&dir.join(format!("{name}.json")))?;
        let path = dir.join(format!("{name}.bin"));
        let blob = checkpoint::read_f64s(&path)?;
        let nw = m.d_r * m.d_c;
        if blob.len() < nw + m.d_c {
            return Err(CheckpointError::corrupt(&path, "truncated head"));
        }
        let mut head = Self::from_parts(
            m.d_r,
            m.d_c,
            blob[..nw].to_vec(),
            blob[nw..nw + m.d_c].to_vec(),
            m.dropout,
            m.placement,
        );
        head.adam = AdamState::from_f64s(&blob[nw + m.d_c..])
            .ok_or_else(|| CheckpointError::corrupt(&path, "bad optimizer state"))?;
        Ok(head)
    }
}
