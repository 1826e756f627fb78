//! Mini-batch Adam training and evaluation.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::graph::ClaimEvidenceGraph;
use crate::tensor::Tensor;
use crate::walk::dictionary::{init_confounder_dictionary, ConfounderDictionary};
use crate::walk::model::{compute_losses, evidence_supervision_loss, forward_causal};
use crate::walk::params::{ModelConfig, ModelParams};

/// What the trainer minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// `L_walk + L_causal`.
    Full,
    /// `L_walk` only: the model without the intervention branch.
    WalkOnly,
}

/// Which distribution [`evaluate`] takes the argmax of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// `l_causal`.
    Causal,
    /// `l_pred`.
    WalkOnly,
}

impl Objective {
    pub fn eval_mode(self) -> EvalMode {
        match self {
            Objective::Full => EvalMode::Causal,
            Objective::WalkOnly => EvalMode::WalkOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub objective: Objective,
    pub evidence_supervision: bool,
    pub supervision_weight: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 3e-3,
            epochs: 10,
            batch_size: 4,
            seed: 0,
            objective: Objective::Full,
            evidence_supervision: false,
            supervision_weight: 0.5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam state for every parameter block.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: i32,
}

impl Adam {
    pub fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors.iter().map(|t| vec![0.0; t.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn update(&mut self, params: &mut ModelParams, grads: &[Vec<f64>], config: &TrainConfig) {
        self.step += 1;
        let bc1 = 1.0 - libm::pow(config.beta1, f64::from(self.step));
        let bc2 = 1.0 - libm::pow(config.beta2, f64::from(self.step));
        for (b, t) in params.tensors.iter_mut().enumerate() {
            let (m, v) = (&mut self.m[b], &mut self.v[b]);
            for (i, p) in t.data_mut().iter_mut().enumerate() {
                let g = grads[b][i];
                m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
                v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                *p -= config.lr * mhat / (libm::sqrt(vhat) + config.eps);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss_walk: f64,
    pub loss_causal: f64,
    pub loss_total: f64,
    pub dev_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub params: ModelParams,
    pub dictionary: ConfounderDictionary,
    pub history: Vec<EpochMetrics>,
}

/// Loss values and gradients of a single example.
pub struct StepResult {
    pub loss_walk: f64,
    pub loss_causal: f64,
    pub loss_total: f64,
    pub grads: Vec<Tensor>,
}

fn gold_of(graph: &ClaimEvidenceGraph) -> Result<usize> {
    graph
        .label
        .ok_or_else(|| Error::Config("training graph without a label".into()))
}

/// One forward/backward pass on a fresh tape.
pub fn example_gradients(
    graph: &ClaimEvidenceGraph,
    params: &ModelParams,
    dict: &ConfounderDictionary,
    model: &ModelConfig,
    train: &TrainConfig,
) -> Result<StepResult> {
    let gold = gold_of(graph)?;
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, true);
    let forward = forward_causal(&mut tape, graph, &bound, dict, model)?;
    let losses = compute_losses(&mut tape, &forward, gold)?;
    let mut objective = match train.objective {
        Objective::Full => losses.total,
        Objective::WalkOnly => losses.walk,
    };
    if train.evidence_supervision {
        if let Some(flags) = &graph.evidence_flags {
            if let Some(sup) = evidence_supervision_loss(&mut tape, &forward, flags)? {
                let sup = tape.scale(sup, train.supervision_weight);
                objective = tape.add(objective, sup)?;
            }
        }
    }
    tape.backward(objective)?;
    let grads = bound
        .vars
        .iter()
        .zip(&params.tensors)
        .map(|(v, t)| tape.grad(*v).unwrap_or_else(|| Tensor::zeros(t.shape())))
        .collect();
    Ok(StepResult {
        loss_walk: tape.value(losses.walk).item(),
        loss_causal: tape.value(losses.causal).item(),
        loss_total: tape.value(objective).item(),
        grads,
    })
}

/// Builds the dictionary once from the initial parameters, then runs
/// shuffled mini-batch Adam for `epochs`. Deterministic given the seed.
pub fn train(
    train_set: &[ClaimEvidenceGraph],
    dev_set: Option<&[ClaimEvidenceGraph]>,
    model: &ModelConfig,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if config.batch_size == 0 || !(config.lr >= 0.0) {
        return Err(Error::Config("batch size must be >= 1 and lr >= 0".into()));
    }
    let mut params = ModelParams::init(model, config.seed)?;
    let dictionary = init_confounder_dictionary(train_set, &params, model, config.seed)?;
    let mut adam = Adam::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5851_f42d));
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut sw, mut sc, mut st) = (0.0, 0.0, 0.0);
        for (batch, chunk) in order.chunks(config.batch_size).enumerate() {
            let mut acc: Vec<Vec<f64>> =
                params.tensors.iter().map(|t| vec![0.0; t.len()]).collect();
            for &i in chunk {
                let step = example_gradients(&train_set[i], &params, &dictionary, model, config)?;
                if !step.loss_total.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        batch,
                        norms: params.norms(),
                    });
                }
                sw += step.loss_walk;
                sc += step.loss_causal;
                st += step.loss_total;
                for (a, g) in acc.iter_mut().zip(&step.grads) {
                    for (x, y) in a.iter_mut().zip(g.data()) {
                        *x += y;
                    }
                }
            }
            let scale = 1.0 / chunk.len() as f64;
            for a in &mut acc {
                for x in a.iter_mut() {
                    *x *= scale;
                }
            }
            adam.update(&mut params, &acc, config);
            if !params.all_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch,
                    norms: params.norms(),
                });
            }
        }
        let count = train_set.len() as f64;
        let dev_accuracy = match dev_set {
            Some(dev) if !dev.is_empty() => Some(
                evaluate(dev, &params, &dictionary, model, config.objective.eval_mode())?.accuracy,
            ),
            _ => None,
        };
        history.push(EpochMetrics {
            epoch: epoch + 1,
            loss_walk: sw / count,
            loss_causal: sc / count,
            loss_total: st / count,
            dev_accuracy,
        });
    }
    Ok(TrainedModel {
        config: model.clone(),
        params,
        dictionary,
        history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub count: usize,
    /// `confusion[gold][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    /// Mean row entropy of the transition matrices (nats), over graphs
    /// with at least two nodes.
    pub mean_transition_entropy: f64,
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Per-graph prediction under `mode`, plus the transition row entropy.
pub fn predict(
    graph: &ClaimEvidenceGraph,
    params: &ModelParams,
    dict: &ConfounderDictionary,
    model: &ModelConfig,
    mode: EvalMode,
) -> Result<(usize, Option<f64>)> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, false);
    let forward = forward_causal(&mut tape, graph, &bound, dict, model)?;
    let dist = match mode {
        EvalMode::Causal => forward.l_causal,
        EvalMode::WalkOnly => forward.l_pred,
    };
    let entropy = forward.transitions.as_ref().map(|(_, t)| t.mean_row_entropy());
    Ok((argmax(tape.value(dist).data()), entropy))
}

/// Accuracy and per-class precision/recall of argmax predictions.
pub fn evaluate(
    graphs: &[ClaimEvidenceGraph],
    params: &ModelParams,
    dict: &ConfounderDictionary,
    model: &ModelConfig,
    mode: EvalMode,
) -> Result<EvalMetrics> {
    if graphs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = model.classes;
    let mut confusion = vec![vec![0usize; n]; n];
    let mut entropy_sum = 0.0;
    let mut entropy_count = 0usize;
    for g in graphs {
        let gold = gold_of(g)?;
        if gold >= n {
            return Err(Error::Config(alloc::format!("label {gold} outside {n} classes")));
        }
        let (pred, entropy) = predict(g, params, dict, model, mode)?;
        confusion[gold][pred] += 1;
        if let Some(e) = entropy {
            entropy_sum += e;
            entropy_count += 1;
        }
    }
    Ok(metrics_from_confusion(
        confusion,
        if entropy_count > 0 {
            entropy_sum / entropy_count as f64
        } else {
            0.0
        },
    ))
}

pub fn metrics_from_confusion(confusion: Vec<Vec<usize>>, entropy: f64) -> EvalMetrics {
    let n = confusion.len();
    let count: usize = confusion.iter().flatten().sum();
    let correct: usize = (0..n).map(|i| confusion[i][i]).sum();
    let ratio = |a: usize, b: usize| if b > 0 { a as f64 / b as f64 } else { 0.0 };
    let precision = (0..n)
        .map(|c| ratio(confusion[c][c], (0..n).map(|g| confusion[g][c]).sum()))
        .collect();
    let recall = (0..n)
        .map(|c| ratio(confusion[c][c], confusion[c].iter().sum()))
        .collect();
    EvalMetrics {
        accuracy: ratio(correct, count),
        count,
        confusion,
        precision,
        recall,
        mean_transition_entropy: entropy,
    }
}
