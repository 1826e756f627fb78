//! Output heads: the path-only classifier and the intervened
//! (NWGM-deconfounded) classifier.

use crate::autodiff::{Tape, Var};
use crate::error::Result;
use crate::walk::params::Bound;

/// `l_r = softmax(x_r W_c + b_c)`.
pub fn path_only_classify(tape: &mut Tape, path_rep: Var, params: &Bound) -> Result<Var> {
    let l = &params.layout;
    let logits = tape.matmul(path_rep, params.get(l.cls_weight))?;
    let logits = tape.add(logits, params.get(l.cls_bias))?;
    tape.row_softmax(logits)
}

/// `softmax(x_r W_r + alpha * E[x_g] W_g)`: the expectation over the
/// confounder moved inside the softmax.
pub fn intervene(
    tape: &mut Tape,
    path_rep: Var,
    expected_graph_rep: Var,
    params: &Bound,
    alpha: f64,
) -> Result<Var> {
    let l = &params.layout;
    let direct = tape.matmul(path_rep, params.get(l.w_r))?;
    let confounder = tape.matmul(expected_graph_rep, params.get(l.w_g))?;
    let confounder = tape.scale(confounder, alpha);
    let logits = tape.add(direct, confounder)?;
    tape.row_softmax(logits)
}
