//! Frozen per-class confounder dictionary and the attention that turns it
//! into an expected graph representation.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{gconv_forward, ClaimEvidenceGraph};
use crate::kmeans::{kmeans, KMeansConfig};
use crate::tensor::Tensor;
use crate::walk::encode::graph_summary;
use crate::walk::params::{Bound, ModelConfig, ModelParams};

/// `N` blocks of `k` cluster centers (each `k x d`).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfounderDictionary {
    pub centers: Vec<Tensor>,
    pub k: usize,
    pub frozen: bool,
}

impl ConfounderDictionary {
    pub fn new(centers: Vec<Tensor>) -> Result<Self> {
        let first = centers
            .first()
            .ok_or_else(|| Error::Config("dictionary needs at least one class".into()))?;
        let shape = first.shape().to_vec();
        for c in &centers {
            if c.shape() != shape.as_slice() || !c.is_matrix() {
                return Err(Error::Shape {
                    op: "confounder dictionary",
                    left: shape.clone(),
                    right: c.shape().to_vec(),
                });
            }
            if !c.is_finite() {
                return Err(Error::NonFinite("dictionary center".into()));
            }
        }
        Ok(Self {
            k: shape[0],
            centers,
            frozen: true,
        })
    }

    pub fn classes(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].cols()
    }

    /// The whole dictionary as an `N x k x d` tensor.
    pub fn to_tensor(&self) -> Tensor {
        let mut data = Vec::with_capacity(self.classes() * self.k * self.dim());
        for c in &self.centers {
            data.extend_from_slice(c.data());
        }
        Tensor::new(&[self.classes(), self.k, self.dim()], data).expect("dictionary shape")
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        let s = t.shape();
        if s.len() != 3 {
            return Err(Error::Shape {
                op: "confounder dictionary",
                left: s.to_vec(),
                right: alloc::vec![3],
            });
        }
        let block = s[1] * s[2];
        let centers = (0..s[0])
            .map(|i| Tensor::new(&[s[1], s[2]], t.data()[i * block..(i + 1) * block].to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(centers)
    }
}

/// Graph representation `x_g` of one graph under `params`, without
/// recording gradients.
pub fn graph_representation(
    graph: &ClaimEvidenceGraph,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, false);
    let nodes = gconv_forward(&mut tape, graph, &bound.gconv_layers(), &config.gconv)?;
    let summary = graph_summary(&mut tape, nodes, &bound)?;
    Ok(tape.value(summary.rep).data().to_vec())
}

/// Clusters the graph representations of each class into `k` centers with
/// K-Means and freezes the result.
pub fn init_confounder_dictionary(
    graphs: &[ClaimEvidenceGraph],
    params: &ModelParams,
    config: &ModelConfig,
    seed: u64,
) -> Result<ConfounderDictionary> {
    let classes = config.classes;
    let k = config.dict_k;
    let mut per_class: Vec<Vec<Vec<f64>>> = alloc::vec![Vec::new(); classes];
    for g in graphs {
        let label = g
            .label
            .ok_or_else(|| Error::Config("training graph without a label".into()))?;
        if label >= classes {
            return Err(Error::Config(format!("label {label} outside {classes} classes")));
        }
        per_class[label].push(graph_representation(g, params, config)?);
    }
    let mut centers = Vec::with_capacity(classes);
    for (class, points) in per_class.iter().enumerate() {
        if points.len() < k {
            return Err(Error::InsufficientClass {
                class,
                have: points.len(),
                need: k,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9 + class as u64));
        let result = kmeans(points, k, &KMeansConfig::default(), &mut rng)?;
        centers.push(Tensor::from_rows(&result.centers)?);
    }
    ConfounderDictionary::new(centers)
}

/// Per-class dictionary values and projected keys on a tape.
#[derive(Debug, Clone)]
pub struct DictionaryAttention {
    /// `k x d` centers per class.
    pub values: Vec<Var>,
    /// `d x k` transposed keys `(Z_i W_k)^T` per class.
    pub keys_t: Vec<Var>,
}

pub fn prepare_attention(
    tape: &mut Tape,
    dict: &ConfounderDictionary,
    params: &Bound,
) -> Result<DictionaryAttention> {
    let w_k = params.get(params.layout.w_k);
    let mut values = Vec::with_capacity(dict.classes());
    let mut keys_t = Vec::with_capacity(dict.classes());
    for c in &dict.centers {
        let z = tape.constant(c.clone());
        let k = tape.matmul(z, w_k)?;
        keys_t.push(tape.transpose(k)?);
        values.push(z);
    }
    Ok(DictionaryAttention { values, keys_t })
}

/// `E[x_g] = (1/N) * l_r · D'_g`, where row `i` of `D'_g` is
/// `softmax(q K_i^T) Z_i` with `q = x_r W_q`.
pub fn expected_graph_rep(
    tape: &mut Tape,
    path_rep: Var,
    path_probs: Var,
    attention: &DictionaryAttention,
    params: &Bound,
) -> Result<Var> {
    let q = tape.matmul(path_rep, params.get(params.layout.w_q))?;
    let mut attended = Vec::with_capacity(attention.values.len());
    for (z, kt) in attention.values.iter().zip(&attention.keys_t) {
        let scores = tape.matmul(q, *kt)?;
        let weights = tape.row_softmax(scores)?;
        attended.push(tape.matmul(weights, *z)?);
    }
    let classes = attended.len();
    let stacked = tape.concat(&attended, crate::autodiff::Axis::Rows)?;
    let mixed = tape.matmul(path_probs, stacked)?;
    Ok(tape.scale(mixed, 1.0 / classes as f64))
}
