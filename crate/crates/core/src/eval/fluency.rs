use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Embedder, EvalError};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FluencyConfig {
    pub clusters: usize,
    pub max_iterations: usize,
    /// Scaling constant `c` in `exp(-c * KL)`.
    pub scaling: f64,
    /// Number of interior mixture weights on the divergence curve.
    pub curve_points: usize,
    /// Even number of Simpson intervals for the frontier integral.
    pub integral_intervals: usize,
    pub seed: u64,
}

impl Default for FluencyConfig {
    fn default() -> Self {
        Self {
            clusters: 16,
            max_iterations: 100,
            scaling: 5.0,
            curve_points: 99,
            integral_intervals: 2000,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluencyScores {
    /// Area under the divergence curve; 1 for identical distributions.
    pub mauve: f64,
    /// Frontier integral; 0 for identical distributions, 1 for disjoint ones.
    pub frontier: f64,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = dist2(point, centroid);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Lloyd's algorithm with k-means++ seeding. Returns the cluster index of
/// each point; ties go to the lowest cluster index.
pub fn kmeans(points: &[Vec<f64>], k: usize, max_iterations: usize, seed: u64) -> Vec<usize> {
    if points.is_empty() || k == 0 {
        return vec![0; points.len()];
    }
    let mut r = rng::stream(seed, &[rng::tag("kmeans")]);
    let mut centroids = vec![points[r.random_range(0..points.len())].clone()];
    while centroids.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|p| dist2(p, &centroids[nearest(p, &centroids)]))
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut u = r.random::<f64>() * total;
        let mut pick = points.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            u -= w;
            if u < 0.0 {
                pick = i;
                break;
            }
        }
        centroids.push(points[pick].clone());
    }
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    for _ in 0..max_iterations {
        let width = points[0].len();
        let mut sums = vec![vec![0.0; width]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (p, &a) in points.iter().zip(&assign) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for (c, centroid) in centroids.iter_mut().enumerate() {
            if counts[c] > 0 {
                *centroid = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    assign
}

pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| if qi > 0.0 { pi * (pi / qi).ln() } else { f64::INFINITY })
        .sum()
}

fn mixture(p: &[f64], q: &[f64], lambda: f64) -> Vec<f64> {
    p.iter().zip(q).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect()
}

/// Points `(exp(-c KL(Q||R)), exp(-c KL(P||R)))` for `R = lambda P + (1 - lambda) Q`
/// on a grid symmetric under `lambda -> 1 - lambda`, plus `(1, 0)` and `(0, 1)`.
pub fn divergence_curve(p: &[f64], q: &[f64], scaling: f64, points: usize) -> Vec<(f64, f64)> {
    let mut curve = vec![(0.0, 1.0), (1.0, 0.0)];
    for i in 1..=points {
        let lambda = i as f64 / (points + 1) as f64;
        let r = mixture(p, q, lambda);
        curve.push((
            (-scaling * kl_divergence(q, &r)).exp(),
            (-scaling * kl_divergence(p, &r)).exp(),
        ));
    }
    curve
}

/// Trapezoid area under the curve after sorting by x.
pub fn mauve_area(curve: &[(f64, f64)]) -> f64 {
    let mut pts = curve.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// `2 * integral_0^1 [lambda KL(P||R) + (1 - lambda) KL(Q||R)] dlambda` by
/// composite Simpson's rule; endpoint terms are taken at their limit 0.
pub fn frontier_integral(p: &[f64], q: &[f64], intervals: usize) -> f64 {
    let n = intervals.max(2) + intervals % 2;
    let f = |lambda: f64| {
        if lambda <= 0.0 || lambda >= 1.0 {
            return 0.0;
        }
        let r = mixture(p, q, lambda);
        lambda * kl_divergence(p, &r) + (1.0 - lambda) * kl_divergence(q, &r)
    };
    let h = 1.0 / n as f64;
    let mut sum = f(0.0) + f(1.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(i as f64 * h);
    }
    (2.0 * sum * h / 3.0).clamp(0.0, 1.0)
}

/// Normalised cluster histograms of the human and machine points.
pub fn histograms(assign: &[usize], is_human: &[bool], k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; k];
    let mut q = vec![0.0; k];
    for (&a, &h) in assign.iter().zip(is_human) {
        if h {
            p[a] += 1.0;
        } else {
            q[a] += 1.0;
        }
    }
    let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
    p.iter_mut().for_each(|x| *x /= sp);
    q.iter_mut().for_each(|x| *x /= sq);
    (p, q)
}

/// Joint quantisation of both sets. The union is put in a canonical order
/// before clustering, so the result does not depend on argument order.
pub fn fluency_from_embeddings(
    human: &[Vec<f64>],
    machine: &[Vec<f64>],
    config: &FluencyConfig,
) -> Result<FluencyScores, EvalError> {
    let k = config.clusters.max(1);
    let smaller = human.len().min(machine.len());
    if smaller < k {
        return Err(EvalError::TooFewSamples {
            needed: k,
            got: smaller,
        });
    }
    let mut union: Vec<(&Vec<f64>, bool)> = human
        .iter()
        .map(|v| (v, true))
        .chain(machine.iter().map(|v| (v, false)))
        .collect();
    union.sort_by(|a, b| {
        a.0.iter()
            .zip(b.0.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let points: Vec<Vec<f64>> = union.iter().map(|(v, _)| (*v).clone()).collect();
    let assign = kmeans(&points, k, config.max_iterations, config.seed);
    let origins: Vec<bool> = union.iter().map(|(_, h)| *h).collect();
    let (p, q) = histograms(&assign, &origins, k);
    Ok(FluencyScores {
        mauve: mauve_area(&divergence_curve(&p, &q, config.scaling, config.curve_points)),
        frontier: frontier_integral(&p, &q, config.integral_intervals),
    })
}

pub fn fluency_scores<S: AsRef<str>>(
    human: &[S],
    machine: &[S],
    embedder: &dyn Embedder,
    config: &FluencyConfig,
) -> Result<FluencyScores, EvalError> {
    let h: Vec<Vec<f64>> = human.iter().map(|t| embedder.embed(t.as_ref())).collect();
    let m: Vec<Vec<f64>> = machine.iter().map(|t| embedder.embed(t.as_ref())).collect();
    fluency_from_embeddings(&h, &m, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_histograms() {
        let p = [0.2, 0.3, 0.5];
        assert!((mauve_area(&divergence_curve(&p, &p, 5.0, 99)) - 1.0).abs() < 1e-12);
        assert!(frontier_integral(&p, &p, 100) < 1e-12);
    }

    #[test]
    fn disjoint_histograms_match_closed_form() {
        let (p, q) = ([0.5, 0.5, 0.0, 0.0], [0.0, 0.0, 0.3, 0.7]);
        // curve is x = (1 - l)^c, y = l^c; area = c * B(c, c + 1)
        let c = 5.0;
        let exact = 5.0 * 24.0 * 120.0 / 3628800.0;
        let area = mauve_area(&divergence_curve(&p, &q, c, 999));
        assert!((area - exact).abs() < 1e-3, "{area} vs {exact}");
        // 2 * integral of -l ln l - (1 - l) ln(1 - l) = 1
        let fi = frontier_integral(&p, &q, 2000);
        assert!((fi - 1.0).abs() < 1e-3, "{fi}");
    }

    #[test]
    fn kl_basics() {
        assert_eq!(kl_divergence(&[1.0, 0.0], &[1.0, 0.0]), 0.0);
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]), f64::INFINITY);
    }

    #[test]
    fn kmeans_separates_two_blobs() {
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![if i < 10 { 0.0 } else { 10.0 } + i as f64 * 0.01])
            .collect();
        let a = kmeans(&pts, 2, 50, 3);
        assert!(a[..10].iter().all(|&x| x == a[0]));
        assert!(a[10..].iter().all(|&x| x == a[10]));
        assert_ne!(a[0], a[10]);
    }

    #[test]
    fn too_few_samples() {
        let h = vec![vec![0.0]; 3];
        assert!(matches!(
            fluency_from_embeddings(&h, &h, &FluencyConfig::default()),
            Err(EvalError::TooFewSamples { needed: 16, got: 3 })
        ));
    }
}
