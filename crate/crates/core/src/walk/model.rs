//! Full forward pass and losses.

use alloc::vec;
use alloc::vec::Vec;

use crate::autodiff::{Axis, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{gconv_forward, ClaimEvidenceGraph};
use crate::tensor::Tensor;
use crate::walk::beam::{beam_search_paths, BeamSet, ReasoningPath};
use crate::walk::dictionary::{expected_graph_rep, prepare_attention, ConfounderDictionary};
use crate::walk::encode::{encode_path, graph_summary};
use crate::walk::head::{intervene, path_only_classify};
use crate::walk::params::{Bound, ModelConfig};
use crate::walk::transition::{
    edge_scores, path_log_prob_var, transition_probs, walk_mask, TransitionMatrix,
};

/// Per-path tape nodes.
#[derive(Debug, Clone, Copy)]
pub struct PathNodes {
    pub rep: Var,
    /// Path-only class distribution `l_r`.
    pub l_r: Var,
    /// `P(L | do(r))`.
    pub intervened: Var,
    pub log_prob: Var,
}

/// Tape handles of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub node_reps: Var,
    pub graph_rep: Var,
    /// `None` on a claim-only graph.
    pub transitions: Option<(Var, TransitionMatrix)>,
    pub beam: BeamSet,
    pub paths: Vec<PathNodes>,
    /// `1 x w` normalized beam weights.
    pub beam_weights: Var,
    pub l_causal: Var,
    pub l_pred: Var,
}

/// Plain values extracted from a [`Forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub l_causal: Vec<f64>,
    pub l_pred: Vec<f64>,
    /// `(path, l_r, P(L | do(r)))` per beam path.
    pub per_path: Vec<(ReasoningPath, Vec<f64>, Vec<f64>)>,
    pub beam_weights: Vec<f64>,
}

impl Forward {
    pub fn output(&self, tape: &Tape) -> ModelOutput {
        ModelOutput {
            l_causal: tape.value(self.l_causal).data().to_vec(),
            l_pred: tape.value(self.l_pred).data().to_vec(),
            per_path: self
                .beam
                .paths
                .iter()
                .zip(&self.paths)
                .map(|(p, n)| {
                    (
                        p.clone(),
                        tape.value(n.l_r).data().to_vec(),
                        tape.value(n.intervened).data().to_vec(),
                    )
                })
                .collect(),
            beam_weights: tape.value(self.beam_weights).data().to_vec(),
        }
    }
}

/// Encodes the graph, walks it with beam search, and combines the
/// per-path intervened distributions with beam weights
/// `P_walk(r) / sum_beam P_walk`.
///
/// `l_causal = sum_r w(r) P(L | do(r))` and `l_pred = sum_r w(r) l_r`.
/// Beam selection is not differentiated; the weights are, through the
/// transition matrix.
pub fn forward_causal(
    tape: &mut Tape,
    graph: &ClaimEvidenceGraph,
    params: &Bound,
    dict: &ConfounderDictionary,
    config: &ModelConfig,
) -> Result<Forward> {
    if dict.classes() != config.classes {
        return Err(Error::Config(alloc::format!(
            "dictionary has {} classes, model has {}",
            dict.classes(),
            config.classes
        )));
    }
    let nodes = gconv_forward(tape, graph, &params.gconv_layers(), &config.gconv)?;
    let summary = graph_summary(tape, nodes, params)?;

    let (transitions, beam) = if graph.num_nodes() > 1 {
        let scores = edge_scores(tape, nodes, params)?;
        let (p, snapshot) = transition_probs(tape, scores, &walk_mask(&graph.adjacency))?;
        let beam = beam_search_paths(&snapshot, config.beam_width, config.max_hops);
        (Some((p, snapshot)), beam)
    } else {
        let beam = BeamSet {
            paths: vec![ReasoningPath::new(vec![0], 0.0)],
            width: config.beam_width,
        };
        (None, beam)
    };

    let attention = prepare_attention(tape, dict, params)?;
    let mut paths = Vec::with_capacity(beam.paths.len());
    for path in &beam.paths {
        let rep = encode_path(tape, nodes, &path.nodes, summary.rep, params)?;
        let l_r = path_only_classify(tape, rep, params)?;
        let expected = expected_graph_rep(tape, rep, l_r, &attention, params)?;
        let intervened = intervene(tape, rep, expected, params, config.alpha)?;
        let log_prob = match &transitions {
            Some((p, _)) => path_log_prob_var(tape, *p, &path.nodes)?,
            None => tape.constant(Tensor::scalar(0.0)),
        };
        paths.push(PathNodes {
            rep,
            l_r,
            intervened,
            log_prob,
        });
    }

    let log_probs: Vec<Var> = paths.iter().map(|p| p.log_prob).collect();
    let log_probs = tape.concat(&log_probs, Axis::Cols)?;
    let beam_weights = tape.row_softmax(log_probs)?;
    let intervened: Vec<Var> = paths.iter().map(|p| p.intervened).collect();
    let intervened = tape.concat(&intervened, Axis::Rows)?;
    let l_causal = tape.matmul(beam_weights, intervened)?;
    let path_only: Vec<Var> = paths.iter().map(|p| p.l_r).collect();
    let path_only = tape.concat(&path_only, Axis::Rows)?;
    let l_pred = tape.matmul(beam_weights, path_only)?;

    Ok(Forward {
        node_reps: nodes,
        graph_rep: summary.rep,
        transitions,
        beam,
        paths,
        beam_weights,
        l_causal,
        l_pred,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct Losses {
    pub causal: Var,
    pub walk: Var,
    pub total: Var,
}

pub const LOG_CLAMP: f64 = 1e-12;

/// `-log(max(dist[gold], 1e-12))` as a `1 x 1` node.
pub fn cross_entropy(tape: &mut Tape, dist: Var, gold: usize) -> Result<Var> {
    let n = tape.value(dist).len();
    if gold >= n {
        return Err(Error::Config(alloc::format!("gold label {gold} outside {n} classes")));
    }
    let col = tape.reshape(dist, &[n, 1])?;
    let p = tape.select_rows(col, &[gold])?;
    let p = tape.clamp_min(p, LOG_CLAMP);
    let lp = tape.log(p);
    Ok(tape.scale(lp, -1.0))
}

/// Cross-entropy of `l_causal` and `l_pred` against the gold class, and
/// their sum.
pub fn compute_losses(tape: &mut Tape, forward: &Forward, gold: usize) -> Result<Losses> {
    let causal = cross_entropy(tape, forward.l_causal, gold)?;
    let walk = cross_entropy(tape, forward.l_pred, gold)?;
    let total = tape.add(walk, causal)?;
    Ok(Losses {
        causal,
        walk,
        total,
    })
}

/// Negative log of the probability mass each supervised transition row
/// puts on gold evidence: `-mean_i log sum_{j in gold, j != i} T[i][j]`.
/// Rows are the claim and every gold evidence node; rows with no gold
/// neighbor are skipped. `None` when the graph has no usable rows.
pub fn evidence_supervision_loss(
    tape: &mut Tape,
    forward: &Forward,
    flags: &[bool],
) -> Result<Option<Var>> {
    let Some((probs, snapshot)) = &forward.transitions else {
        return Ok(None);
    };
    let n = snapshot.num_nodes();
    if flags.len() != n {
        return Err(Error::Config(alloc::format!(
            "{} evidence flags for {} nodes",
            flags.len(),
            n
        )));
    }
    let gold: Vec<usize> = (1..n).filter(|&j| flags[j]).collect();
    let mut idx = Vec::new();
    let mut owner = Vec::new();
    let mut rows = 0usize;
    for i in core::iter::once(0).chain(gold.iter().copied()) {
        let before = idx.len();
        for &j in gold.iter().filter(|&&j| j != i && snapshot.is_neighbor(i, j)) {
            idx.push(i * n + j);
            owner.push(rows);
        }
        if idx.len() > before {
            rows += 1;
        }
    }
    if rows == 0 {
        return Ok(None);
    }
    let m = idx.len();
    let mut grouping = Tensor::zeros(&[rows, m]);
    for (k, &r) in owner.iter().enumerate() {
        grouping.set(r, k, 1.0);
    }
    let flat = tape.reshape(*probs, &[n * n, 1])?;
    let picked = tape.select_rows(flat, &idx)?;
    let grouping = tape.constant(grouping);
    let mass = tape.matmul(grouping, picked)?;
    let mass = tape.clamp_min(mass, LOG_CLAMP);
    let logs = tape.log(mass);
    let total = tape.sum(logs);
    Ok(Some(tape.scale(total, -1.0 / rows as f64)))
}
