//! Graph summary by claim-conditioned attention, and LSTM path encoding.

use alloc::vec::Vec;

use crate::autodiff::{Tape, Var};
use crate::error::Result;
use crate::tensor::Tensor;
use crate::walk::params::Bound;

/// Attention summary of the evidence nodes.
#[derive(Debug, Clone, Copy)]
pub struct GraphSummary {
    /// `1 x d` graph representation.
    pub rep: Var,
    /// `1 x n` attention weights over evidence nodes; `None` without
    /// evidence.
    pub weights: Option<Var>,
}

/// `x_g = sum_i alpha_i x_i` over evidence nodes, with
/// `alpha = softmax(out · tanh(W_claim x_0 + W_node x_i + b))`.
/// A claim-only graph summarizes to the zero vector.
pub fn graph_summary(tape: &mut Tape, nodes: Var, params: &Bound) -> Result<GraphSummary> {
    let (rows, d) = {
        let v = tape.value(nodes);
        (v.rows(), v.cols())
    };
    let n = rows - 1;
    if n == 0 {
        return Ok(GraphSummary {
            rep: tape.constant(Tensor::zeros(&[1, d])),
            weights: None,
        });
    }
    let l = &params.layout;
    let claim = tape.select_rows(nodes, &[0])?;
    let claim = tape.matmul(claim, params.get(l.attn_claim))?;
    let claim = tape.add(claim, params.get(l.attn_bias))?;
    let claim = tape.select_rows(claim, &alloc::vec![0; n])?;
    let evidence_idx: Vec<usize> = (1..=n).collect();
    let evidence = tape.select_rows(nodes, &evidence_idx)?;
    let node = tape.matmul(evidence, params.get(l.attn_node))?;
    let pre = tape.add(claim, node)?;
    let hidden = tape.tanh(pre);
    let scores = tape.matmul(hidden, params.get(l.attn_out))?;
    let scores = tape.transpose(scores)?;
    let weights = tape.row_softmax(scores)?;
    let rep = tape.matmul(weights, evidence)?;
    Ok(GraphSummary {
        rep,
        weights: Some(weights),
    })
}

/// One LSTM step; returns `(h, c)`.
pub fn lstm_step(tape: &mut Tape, x: Var, h: Var, c: Var, params: &Bound) -> Result<(Var, Var)> {
    let l = &params.layout;
    let gate = |tape: &mut Tape, k: usize| -> Result<Var> {
        let a = tape.matmul(x, params.get(l.lstm_w[k]))?;
        let b = tape.matmul(h, params.get(l.lstm_u[k]))?;
        let s = tape.add(a, b)?;
        tape.add(s, params.get(l.lstm_b[k]))
    };
    let i = gate(tape, 0)?;
    let f = gate(tape, 1)?;
    let g = gate(tape, 2)?;
    let o = gate(tape, 3)?;
    let i = tape.sigmoid(i);
    let f = tape.sigmoid(f);
    let g = tape.tanh(g);
    let o = tape.sigmoid(o);
    let keep = tape.mul(f, c)?;
    let write = tape.mul(i, g)?;
    let c_next = tape.add(keep, write)?;
    let squashed = tape.tanh(c_next);
    let h_next = tape.mul(o, squashed)?;
    Ok((h_next, c_next))
}

/// Runs the LSTM over the node representations along `path`, starting
/// from `h0 = c0 = x_g`, and returns the final hidden state (`1 x d`).
pub fn encode_path(
    tape: &mut Tape,
    nodes: Var,
    path: &[usize],
    graph_rep: Var,
    params: &Bound,
) -> Result<Var> {
    let mut h = graph_rep;
    let mut c = graph_rep;
    for &node in path {
        let x = tape.select_rows(nodes, &[node])?;
        let (h2, c2) = lstm_step(tape, x, h, c, params)?;
        h = h2;
        c = c2;
    }
    Ok(h)
}
