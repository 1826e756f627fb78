//! Lloyd's K-Means with k-means++ seeding.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub max_iter: usize,
    /// Stop when the relative objective improvement drops below this.
    pub tol: f64,
    /// Independent seedings; the lowest objective wins.
    pub n_init: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-6,
            n_init: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centers: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub objective: f64,
    /// Objective after every assignment step of the winning run.
    pub history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn seed_plus_plus<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut chosen = vec![rng.gen_range(0..points.len())];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, d) in d2.iter().enumerate() {
                if *d > 0.0 {
                    pick = Some(i);
                    if target < *d {
                        break;
                    }
                    target -= d;
                }
            }
            pick.expect("positive mass")
        } else {
            // All remaining points coincide with a center.
            (0..points.len())
                .find(|i| !chosen.contains(i))
                .expect("k <= points")
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, config: &KMeansConfig) -> KMeansResult {
    let dim = points[0].len();
    let mut assignments = vec![0; points.len()];
    let mut history = Vec::new();
    for _ in 0..config.max_iter {
        let mut objective = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centers);
            assignments[i] = c;
            objective += d;
        }
        let prev = history.last().copied();
        history.push(objective);
        if let Some(prev) = prev {
            if prev - objective <= config.tol * prev.abs() {
                break;
            }
        }
        if objective == 0.0 {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (p, &c) in points.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            if counts[c] > 0 {
                for (x, s) in center.iter_mut().zip(&sums[c]) {
                    *x = s / counts[c] as f64;
                }
            }
        }
    }
    let objective = *history.last().unwrap_or(&0.0);
    KMeansResult {
        centers,
        assignments,
        objective,
        history,
    }
}

/// Clusters `points` into `k` groups.
pub fn kmeans<R: Rng>(
    points: &[Vec<f64>],
    k: usize,
    config: &KMeansConfig,
    rng: &mut R,
) -> Result<KMeansResult> {
    if k == 0 || points.len() < k {
        return Err(Error::Config(alloc::format!(
            "k-means needs 1 <= k <= points, got k={k} with {} points",
            points.len()
        )));
    }
    let mut best: Option<KMeansResult> = None;
    for _ in 0..config.n_init.max(1) {
        let run = lloyd(points, seed_plus_plus(points, k, rng), config);
        if best.as_ref().map_or(true, |b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one run"))
}
