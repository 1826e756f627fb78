//! Beam search over no-revisit walks starting at the claim node.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::walk::transition::TransitionMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ReasoningPath {
    /// Node indices; always starts with the claim node 0.
    pub nodes: Vec<usize>,
    pub log_prob: f64,
    pub prob: f64,
}

impl ReasoningPath {
    pub fn new(nodes: Vec<usize>, log_prob: f64) -> Self {
        Self {
            nodes,
            log_prob,
            prob: libm::exp(log_prob),
        }
    }

    /// Number of hops `m`.
    pub fn hops(&self) -> usize {
        self.nodes.len() - 1
    }
}

/// Up to `width` distinct paths in descending probability order.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSet {
    pub paths: Vec<ReasoningPath>,
    pub width: usize,
}

/// Higher log-probability first; ties go to the lexicographically smaller
/// node sequence, i.e. the smaller next-node index.
pub fn path_order(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1))
}

/// Node count of every returned path: `min(max_hops + 1, n)`.
pub fn path_length(num_nodes: usize, max_hops: usize) -> usize {
    (max_hops + 1).min(num_nodes)
}

/// Step-wise beam expansion from node 0. Every partial path is extended
/// by each unvisited neighbor with positive transition probability, and
/// the best `width` candidates survive each step.
pub fn beam_search_paths(t: &TransitionMatrix, width: usize, max_hops: usize) -> BeamSet {
    let width = width.max(1);
    let n = t.num_nodes();
    let target = path_length(n, max_hops.max(1));
    let mut beam: Vec<(f64, Vec<usize>)> = vec![(0.0, vec![0])];
    for _ in 1..target {
        let mut candidates = Vec::new();
        for (lp, path) in &beam {
            let last = *path.last().expect("non-empty path");
            for j in 0..n {
                if !t.is_neighbor(last, j) || path.contains(&j) {
                    continue;
                }
                let p = t.prob(last, j);
                if p <= 0.0 {
                    continue;
                }
                let mut next = path.clone();
                next.push(j);
                candidates.push((lp + libm::log(p), next));
            }
        }
        if candidates.is_empty() {
            break;
        }
        candidates.sort_by(path_order);
        candidates.truncate(width);
        beam = candidates;
    }
    BeamSet {
        paths: beam
            .into_iter()
            .map(|(lp, nodes)| ReasoningPath::new(nodes, lp))
            .collect(),
        width,
    }
}
