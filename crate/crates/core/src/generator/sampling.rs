use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::vocab::TokenId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeStrategy {
    Greedy,
    Nucleus,
}

/// Picks the next token. Greedy ties go to the lowest id; nucleus sampling
/// keeps the smallest prefix of the probability-sorted vocabulary whose mass
/// reaches `top_p`.
pub fn sample_next<R: Rng>(
    logits: &[f64],
    strategy: DecodeStrategy,
    top_p: f64,
    temperature: f64,
    rng: &mut R,
) -> TokenId {
    match strategy {
        DecodeStrategy::Greedy => {
            let mut best = 0;
            for (i, &l) in logits.iter().enumerate() {
                if l > logits[best] {
                    best = i;
                }
            }
            best as TokenId
        }
        DecodeStrategy::Nucleus => {
            let scaled: Vec<f64> = logits.iter().map(|l| l / temperature).collect();
            let probs = super::tiny::softmax(&scaled);
            let mut order: Vec<usize> = (0..probs.len()).collect();
            order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
            let mut mass = 0.0;
            let mut cut = order.len();
            for (k, &i) in order.iter().enumerate() {
                mass += probs[i];
                if mass >= top_p {
                    cut = k + 1;
                    break;
                }
            }
            let kept = &order[..cut];
            let total: f64 = kept.iter().map(|&i| probs[i]).sum();
            let mut u = rng.random::<f64>() * total;
            for &i in kept {
                u -= probs[i];
                if u < 0.0 {
                    return i as TokenId;
                }
            }
            kept[kept.len() - 1] as TokenId
        }
    }
}
