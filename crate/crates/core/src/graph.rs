//! Fully connected claim-evidence graphs and the stacked graph
//! convolution that encodes them.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::featurizer::{featurize_pair, featurize_sentence, FeaturizerConfig};
use crate::tensor::Tensor;

/// Upper bound on evidence sentences per graph.
pub const MAX_EVIDENCE: usize = 20;

/// Node 0 is the claim, nodes `1..=n` are evidence sentences.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimEvidenceGraph {
    pub node_texts: Vec<String>,
    /// `(n+1) x F` node features.
    pub features: Tensor,
    /// `(n+1) x (n+1)` binary adjacency with zero diagonal.
    pub adjacency: Tensor,
    pub label: Option<usize>,
    /// Gold-evidence markers, index 0 (the claim) always true.
    pub evidence_flags: Option<Vec<bool>>,
}

impl ClaimEvidenceGraph {
    pub fn num_nodes(&self) -> usize {
        self.node_texts.len()
    }

    pub fn num_evidence(&self) -> usize {
        self.node_texts.len() - 1
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    /// Attaches per-evidence gold flags (length `n`); the claim flag is
    /// prepended.
    pub fn with_evidence_flags(mut self, evidence: &[bool]) -> Result<Self> {
        if evidence.len() != self.num_evidence() {
            return Err(Error::Config(format!(
                "{} evidence flags for {} evidences",
                evidence.len(),
                self.num_evidence()
            )));
        }
        let mut flags = Vec::with_capacity(evidence.len() + 1);
        flags.push(true);
        flags.extend_from_slice(evidence);
        self.evidence_flags = Some(flags);
        Ok(self)
    }

    /// Graph over precomputed node features (row 0 = claim).
    pub fn from_features(node_texts: Vec<String>, features: Tensor) -> Result<Self> {
        let n = node_texts.len();
        if n == 0 || features.rows() != n || !features.is_matrix() {
            return Err(Error::Shape {
                op: "build_graph",
                left: features.shape().to_vec(),
                right: alloc::vec![n],
            });
        }
        if n - 1 > MAX_EVIDENCE {
            return Err(Error::TooManyEvidence {
                count: n - 1,
                limit: MAX_EVIDENCE,
            });
        }
        let mut adjacency = Tensor::filled(&[n, n], 1.0);
        for i in 0..n {
            adjacency.set(i, i, 0.0);
        }
        Ok(Self {
            node_texts,
            features,
            adjacency,
            label: None,
            evidence_flags: None,
        })
    }
}

/// Featurizes the claim alone and each evidence paired with the claim,
/// then connects every pair of distinct nodes.
pub fn build_graph(
    claim: &str,
    evidences: &[String],
    featurizer: &FeaturizerConfig,
) -> Result<ClaimEvidenceGraph> {
    featurizer.validate()?;
    if evidences.len() > MAX_EVIDENCE {
        return Err(Error::TooManyEvidence {
            count: evidences.len(),
            limit: MAX_EVIDENCE,
        });
    }
    let mut rows = Vec::with_capacity(evidences.len() + 1);
    rows.push(featurize_sentence(claim, featurizer));
    for e in evidences {
        rows.push(featurize_pair(e, claim, featurizer));
    }
    let mut texts = Vec::with_capacity(evidences.len() + 1);
    texts.push(String::from(claim));
    texts.extend(evidences.iter().cloned());
    ClaimEvidenceGraph::from_features(texts, Tensor::from_rows(&rows)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Symmetric,
    Row,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GconvConfig {
    pub layers: usize,
    pub hidden_dim: usize,
    pub self_loops: bool,
    pub normalization: Normalization,
    /// Adds a separate `H W_root` term to every layer. Without it the
    /// normalized complete graph maps every node to the same row.
    pub root_weight: bool,
}

impl Default for GconvConfig {
    fn default() -> Self {
        Self {
            layers: 2,
            hidden_dim: 64,
            self_loops: true,
            normalization: Normalization::Symmetric,
            root_weight: true,
        }
    }
}

impl GconvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers < 1 || self.hidden_dim < 4 {
            return Err(Error::Config(format!(
                "gconv needs layers >= 1 and hidden_dim >= 4, got {} and {}",
                self.layers, self.hidden_dim
            )));
        }
        Ok(())
    }
}

/// `A (+ I)` followed by the configured degree normalization.
pub fn normalized_adjacency(adjacency: &Tensor, config: &GconvConfig) -> Tensor {
    let n = adjacency.rows();
    let mut a = adjacency.clone();
    if config.self_loops {
        for i in 0..n {
            a.set(i, i, 1.0);
        }
    }
    let deg: Vec<f64> = (0..n).map(|i| a.row_slice(i).iter().sum()).collect();
    let inv = |d: f64, p: f64| if d > 0.0 { 1.0 / libm::pow(d, p) } else { 0.0 };
    for i in 0..n {
        for j in 0..n {
            let v = a.get(i, j);
            let scaled = match config.normalization {
                Normalization::Symmetric => v * inv(deg[i], 0.5) * inv(deg[j], 0.5),
                Normalization::Row => v * inv(deg[i], 1.0),
                Normalization::None => v,
            };
            a.set(i, j, scaled);
        }
    }
    a
}

/// Weights of one convolution layer.
#[derive(Debug, Clone, Copy)]
pub struct GconvLayer {
    pub weight: Var,
    pub root: Option<Var>,
}

/// Stacked `relu(Â H W [+ H W_root])` layers starting from the graph
/// features. Returns the `(n+1) x d` node representations.
pub fn gconv_forward(
    tape: &mut Tape,
    graph: &ClaimEvidenceGraph,
    layers: &[GconvLayer],
    config: &GconvConfig,
) -> Result<Var> {
    if layers.len() != config.layers {
        return Err(Error::Config(format!(
            "{} layer weights for {} configured layers",
            layers.len(),
            config.layers
        )));
    }
    let adj = tape.constant(normalized_adjacency(&graph.adjacency, config));
    let mut h = tape.constant(graph.features.clone());
    for layer in layers {
        let hw = tape.matmul(h, layer.weight)?;
        let mut pre = tape.matmul(adj, hw)?;
        if let Some(root) = layer.root {
            let hr = tape.matmul(h, root)?;
            pre = tape.add(pre, hr)?;
        }
        h = tape.relu(pre);
    }
    Ok(h)
}
