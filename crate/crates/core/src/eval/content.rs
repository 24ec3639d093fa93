use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Embedder, EvalError};

/// Additive smoothing constant for n-gram precisions.
pub const BLEU_SMOOTHING: f64 = 0.01;

/// Above this many replicated tokens the mover distance falls back to the
/// greedy transport plan.
pub const EXACT_MOVER_LIMIT: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub prompt: String,
    pub generated: String,
    pub reference: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContentScores {
    pub bleu: f64,
    /// Mean of `1 / (1 + D)` over triples.
    pub mover: f64,
}

fn ngrams<'a>(tokens: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], usize> {
    let mut out: HashMap<&[&str], usize> = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w).or_default() += 1;
        }
    }
    out
}

/// Corpus BLEU over whitespace tokens, n <= 4, on a 0..100 scale.
///
/// `p_n = (m_n + k) / (t_n + k)` with clipped matches `m_n`, candidate n-gram
/// count `t_n` and `k = BLEU_SMOOTHING`; an order with `t_n = 0` reuses
/// `p_{n-1}`. Brevity penalty `exp(1 - r / c)` when `c < r`. An empty
/// candidate corpus scores 0.
pub fn corpus_bleu<S: AsRef<str>>(candidates: &[S], references: &[S]) -> Result<f64, EvalError> {
    if candidates.len() != references.len() {
        return Err(EvalError::LengthMismatch {
            predictions: candidates.len(),
            gold: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut matches = [0usize; 4];
    let mut totals = [0usize; 4];
    let (mut c_len, mut r_len) = (0usize, 0usize);
    for (index, (cand, refr)) in candidates.iter().zip(references).enumerate() {
        let c: Vec<&str> = cand.as_ref().split_whitespace().collect();
        let r: Vec<&str> = refr.as_ref().split_whitespace().collect();
        if r.is_empty() {
            return Err(EvalError::EmptyReference { index });
        }
        c_len += c.len();
        r_len += r.len();
        for n in 1..=4 {
            let cn = ngrams(&c, n);
            let rn = ngrams(&r, n);
            for (g, &count) in &cn {
                matches[n - 1] += count.min(rn.get(g).copied().unwrap_or(0));
                totals[n - 1] += count;
            }
        }
    }
    if c_len == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    let mut prev = 1.0;
    for n in 0..4 {
        let p = if totals[n] == 0 {
            prev
        } else {
            (matches[n] as f64 + BLEU_SMOOTHING) / (totals[n] as f64 + BLEU_SMOOTHING)
        };
        log_sum += p.ln();
        prev = p;
    }
    let bp = if c_len >= r_len {
        1.0
    } else {
        (1.0 - r_len as f64 / c_len as f64).exp()
    };
    Ok((100.0 * bp * (log_sum / 4.0).exp()).clamp(0.0, 100.0))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian
/// algorithm with potentials). Returns `assignment[row] = column`.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Exact transport distance between uniform token distributions: each side
/// is replicated to `lcm(|a|, |b|)` equal-mass points and optimally matched.
pub fn exact_mover_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let l = a.len() / gcd(a.len(), b.len()) * b.len();
    let ra: Vec<&Vec<f64>> = (0..l).map(|i| &a[i / (l / a.len())]).collect();
    let rb: Vec<&Vec<f64>> = (0..l).map(|i| &b[i / (l / b.len())]).collect();
    let cost: Vec<Vec<f64>> = ra.iter().map(|x| rb.iter().map(|y| euclid(x, y)).collect()).collect();
    let assignment = hungarian(&cost);
    assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>() / l as f64
}

/// Greedy transport: repeatedly ships as much mass as possible along the
/// cheapest remaining pair. An upper bound on the exact distance.
pub fn greedy_mover_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push((euclid(x, y), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    // integer masses on the lcm scale keep the bookkeeping exact
    let l = a.len() / gcd(a.len(), b.len()) * b.len();
    let mut supply = vec![l / a.len(); a.len()];
    let mut demand = vec![l / b.len(); b.len()];
    let mut total = 0.0;
    for (c, i, j) in pairs {
        let m = supply[i].min(demand[j]);
        if m > 0 {
            supply[i] -= m;
            demand[j] -= m;
            total += c * m as f64;
        }
    }
    total / l as f64
}

pub fn mover_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let l = if a.is_empty() || b.is_empty() {
        0
    } else {
        a.len() / gcd(a.len(), b.len()) * b.len()
    };
    if l <= EXACT_MOVER_LIMIT {
        exact_mover_distance(a, b)
    } else {
        greedy_mover_distance(a, b)
    }
}

/// `1 / (1 + D)`: 1 for identical texts, toward 0 as they move apart.
pub fn mover_similarity(candidate: &str, reference: &str, embedder: &dyn Embedder) -> f64 {
    let a = embedder.embed_tokens(candidate);
    let b = embedder.embed_tokens(reference);
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 1.0 } else { 0.0 };
    }
    1.0 / (1.0 + mover_distance(&a, &b))
}

pub fn content_scores(triples: &[Triple], embedder: &dyn Embedder) -> Result<ContentScores, EvalError> {
    if triples.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let cands: Vec<&str> = triples.iter().map(|t| t.generated.as_str()).collect();
    let refs: Vec<&str> = triples.iter().map(|t| t.reference.as_str()).collect();
    let bleu = corpus_bleu(&cands, &refs)?;
    let mover = triples
        .iter()
        .map(|t| mover_similarity(&t.generated, &t.reference, embedder))
        .sum::<f64>()
        / triples.len() as f64;
    Ok(ContentScores { bleu, mover })
}
