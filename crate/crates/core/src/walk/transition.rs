//! Edge scoring, transition probabilities and path probabilities.

use alloc::vec::Vec;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::walk::params::Bound;

/// `a[i][j] = out · tanh(W_src x_i + W_dst x_j + W_claim x_0 + b)`, the
/// one-hidden-layer MLP over `concat(x_i, x_j, x_0)` with its first layer
/// split by input block. Returns an `n x n` score matrix.
pub fn edge_scores(tape: &mut Tape, nodes: Var, params: &Bound) -> Result<Var> {
    let n = tape.value(nodes).rows();
    if n == 0 {
        return Err(Error::Shape {
            op: "edge_scores",
            left: tape.shape(nodes).to_vec(),
            right: alloc::vec![1],
        });
    }
    let l = &params.layout;
    let src = tape.matmul(nodes, params.get(l.edge_src))?;
    let dst = tape.matmul(nodes, params.get(l.edge_dst))?;
    let claim = tape.select_rows(nodes, &[0])?;
    let claim = tape.matmul(claim, params.get(l.edge_claim))?;
    let claim = tape.add(claim, params.get(l.edge_bias))?;

    let rows: Vec<usize> = (0..n * n).map(|k| k / n).collect();
    let cols: Vec<usize> = (0..n * n).map(|k| k % n).collect();
    let src = tape.select_rows(src, &rows)?;
    let dst = tape.select_rows(dst, &cols)?;
    let claim = tape.select_rows(claim, &alloc::vec![0; n * n])?;
    let pre = tape.add(src, dst)?;
    let pre = tape.add(pre, claim)?;
    let hidden = tape.tanh(pre);
    let flat = tape.matmul(hidden, params.get(l.edge_out))?;
    tape.reshape(flat, &[n, n])
}

/// Row-stochastic transition matrix of the walk, restricted to neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub probs: Tensor,
    /// Row-major `n x n`; `true` where `j` is in the neighbor set of `i`.
    pub neighbor_mask: Vec<bool>,
}

impl TransitionMatrix {
    pub fn new(probs: Tensor, neighbor_mask: Vec<bool>) -> Result<Self> {
        if !probs.is_matrix() || probs.rows() != probs.cols() || neighbor_mask.len() != probs.len() {
            return Err(Error::Shape {
                op: "transition matrix",
                left: probs.shape().to_vec(),
                right: alloc::vec![neighbor_mask.len()],
            });
        }
        Ok(Self {
            probs,
            neighbor_mask,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.probs.rows()
    }

    pub fn is_neighbor(&self, i: usize, j: usize) -> bool {
        self.neighbor_mask[i * self.num_nodes() + j]
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.probs.get(i, j)
    }

    /// Mean Shannon entropy (nats) of the rows.
    pub fn mean_row_entropy(&self) -> f64 {
        let n = self.num_nodes();
        let mut total = 0.0;
        for i in 0..n {
            for &p in self.probs.row_slice(i) {
                if p > 0.0 {
                    total -= p * libm::log(p);
                }
            }
        }
        total / n as f64
    }
}

/// Neighbor mask of a graph walk: adjacent and not a self-step.
pub fn walk_mask(adjacency: &Tensor) -> Vec<bool> {
    let n = adjacency.rows();
    (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            i != j && adjacency.get(i, j) != 0.0
        })
        .collect()
}

/// Masked row softmax of the edge scores. Returns the tape node and a
/// value snapshot.
pub fn transition_probs(
    tape: &mut Tape,
    scores: Var,
    neighbor_mask: &[bool],
) -> Result<(Var, TransitionMatrix)> {
    let p = tape.masked_row_softmax(scores, neighbor_mask)?;
    let snapshot = TransitionMatrix::new(tape.value(p).clone(), neighbor_mask.to_vec())?;
    Ok((p, snapshot))
}

fn check_path(path: &[usize], t: &TransitionMatrix) -> Result<()> {
    let n = t.num_nodes();
    for w in path.windows(2) {
        if w[0] >= n || w[1] >= n || !t.is_neighbor(w[0], w[1]) {
            return Err(Error::NotNeighbor {
                from: w[0],
                to: w[1],
            });
        }
    }
    Ok(())
}

/// Log of the product of step transitions along `path`.
pub fn path_log_probability(path: &[usize], t: &TransitionMatrix) -> Result<f64> {
    check_path(path, t)?;
    Ok(path
        .windows(2)
        .map(|w| libm::log(t.prob(w[0], w[1])))
        .sum())
}

/// Product of step transitions along `path`; `1` for a single node.
pub fn path_probability(path: &[usize], t: &TransitionMatrix) -> Result<f64> {
    Ok(libm::exp(path_log_probability(path, t)?))
}

/// Differentiable log-probability of `path` under the transition node
/// `probs` (`n x n`). Returns a `1 x 1` node.
pub fn path_log_prob_var(tape: &mut Tape, probs: Var, path: &[usize]) -> Result<Var> {
    let n = tape.value(probs).rows();
    if path.len() < 2 {
        return Ok(tape.constant(Tensor::scalar(0.0)));
    }
    let flat = tape.reshape(probs, &[n * n, 1])?;
    let idx: Vec<usize> = path.windows(2).map(|w| w[0] * n + w[1]).collect();
    let steps = tape.select_rows(flat, &idx)?;
    let steps = tape.clamp_min(steps, f64::MIN_POSITIVE);
    let logs = tape.log(steps);
    Ok(tape.sum(logs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn complete(n: usize) -> Vec<bool> {
        (0..n * n).map(|k| k / n != k % n).collect()
    }

    #[test]
    fn equal_scores_split_evenly() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::zeros(&[3, 3]));
        let (_, t) = transition_probs(&mut tape, a, &complete(3)).unwrap();
        assert_eq!(t.probs.row_slice(0), &[0.0, 0.5, 0.5]);
        assert_eq!(t.probs.row_slice(2), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn analytic_softmax_row() {
        let mut tape = Tape::new();
        let scores = Tensor::from_rows(&[
            vec![0.0, libm::log(2.0), 0.0],
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let a = tape.constant(scores);
        let (_, t) = transition_probs(&mut tape, a, &complete(3)).unwrap();
        assert!((t.prob(0, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((t.prob(0, 2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_node_has_no_neighbors() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::zeros(&[1, 1]));
        assert_eq!(
            transition_probs(&mut tape, a, &complete(1)).unwrap_err(),
            Error::NoNeighbors { row: 0 }
        );
    }

    #[test]
    fn path_products() {
        let probs = Tensor::from_rows(&[
            vec![0.0, 0.5, 0.5],
            vec![0.5, 0.0, 0.5],
            vec![0.25, 0.75, 0.0],
        ])
        .unwrap();
        let t = TransitionMatrix::new(probs, complete(3)).unwrap();
        assert_eq!(path_probability(&[0], &t).unwrap(), 1.0);
        assert!((path_probability(&[0, 1, 2], &t).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(
            path_probability(&[0, 0], &t).unwrap_err(),
            Error::NotNeighbor { from: 0, to: 0 }
        );
    }

    #[test]
    fn walk_mask_drops_self_steps() {
        let mut a = Tensor::filled(&[3, 3], 1.0);
        a.set(1, 2, 0.0);
        assert_eq!(
            walk_mask(&a),
            vec![false, true, true, true, false, false, true, true, false]
        );
    }
}
