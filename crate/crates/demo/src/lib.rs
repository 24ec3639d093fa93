//! Browser bindings: word-graph aggregation, content-preservation scores and
//! the divergence curve, each returning JSON for the page in `www/`.

use pubstyle::eval::{corpus_bleu, divergence_curve, frontier_integral, mauve_area, mover_similarity, HashingEmbedder};
use pubstyle::wordgraph::{aggregate, build_graph, pool, EmbeddingTable};
use pubstyle::Vocab;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Word vectors in the demo come from hashing, so results need no model.
const EMBED_SEED: u64 = 0;

#[derive(Debug, Serialize, PartialEq)]
pub struct GraphNode {
    pub word: String,
    pub count: usize,
    pub initial: Vec<f64>,
    pub aggregated: Vec<f64>,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct GraphView {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<(usize, usize)>,
    pub pooled: Vec<f64>,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct ContentView {
    pub bleu: f64,
    pub mover_similarity: f64,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct CurveView {
    pub curve: Vec<(f64, f64)>,
    pub mauve: f64,
    pub frontier: f64,
}

pub fn graph_view(text: &str, hops: usize, alpha: f64, width: usize) -> Result<GraphView, String> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(format!("alpha must lie in [0, 1], got {alpha}"));
    }
    if width == 0 {
        return Err("width must be positive".into());
    }
    let vocab = Vocab::build([text]);
    let tokens = vocab.encode(text);
    let embedder = HashingEmbedder::new(width, EMBED_SEED);
    let data: Vec<f64> = (0..vocab.len() as u32)
        .flat_map(|id| embedder.word_vector(vocab.token(id)))
        .collect();
    let table = EmbeddingTable::new(vocab.len(), width, data, Vocab::UNKNOWN).map_err(|e| e.to_string())?;
    let graph = build_graph(&tokens, hops).map_err(|e| e.to_string())?;
    let reps = aggregate(&graph, &table, alpha);
    let nodes = graph
        .nodes()
        .iter()
        .zip(graph.counts())
        .zip(&reps)
        .map(|((&t, &count), rep)| GraphNode {
            word: vocab.token(t).to_string(),
            count,
            initial: table.row(t).to_vec(),
            aggregated: rep.clone(),
        })
        .collect();
    let mut edges = Vec::new();
    for v in 0..graph.nodes().len() {
        edges.extend(graph.neighbors(v).iter().filter(|&&u| u > v).map(|&u| (v, u)));
    }
    Ok(GraphView {
        nodes,
        edges,
        pooled: pool(&graph, &reps),
    })
}

pub fn content_view(candidate: &str, reference: &str) -> Result<ContentView, String> {
    let bleu = corpus_bleu(&[candidate], &[reference]).map_err(|e| e.to_string())?;
    let embedder = HashingEmbedder::new(16, EMBED_SEED);
    Ok(ContentView {
        bleu,
        mover_similarity: mover_similarity(candidate, reference, &embedder),
    })
}

fn histogram(text: &str) -> Result<Vec<f64>, String> {
    let raw: Vec<f64> = text
        .split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("not a number: {s}")))
        .collect::<Result<_, _>>()?;
    if raw.iter().any(|x| *x < 0.0 || !x.is_finite()) {
        return Err("weights must be finite and non-negative".into());
    }
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err("weights must not all be zero".into());
    }
    Ok(raw.iter().map(|x| x / total).collect())
}

pub fn curve_view(p: &str, q: &str, scaling: f64) -> Result<CurveView, String> {
    let (p, q) = (histogram(p)?, histogram(q)?);
    if p.len() != q.len() {
        return Err(format!("histograms have {} and {} bins", p.len(), q.len()));
    }
    if !(scaling > 0.0) {
        return Err("scaling must be positive".into());
    }
    let curve = divergence_curve(&p, &q, scaling, 99);
    Ok(CurveView {
        mauve: mauve_area(&curve),
        frontier: frontier_integral(&p, &q, 2000),
        curve,
    })
}

fn to_js<T: Serialize>(value: Result<T, String>) -> Result<String, JsError> {
    value
        .map(|v| serde_json::to_string(&v).expect("view serialises"))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn word_graph(text: &str, hops: usize, alpha: f64) -> Result<String, JsError> {
    to_js(graph_view(text, hops, alpha, 4))
}

#[wasm_bindgen]
pub fn content_scores(candidate: &str, reference: &str) -> Result<String, JsError> {
    to_js(content_view(candidate, reference))
}

#[wasm_bindgen]
pub fn divergence(p: &str, q: &str, scaling: f64) -> Result<String, JsError> {
    to_js(curve_view(p, q, scaling))
}
