use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::featurizer::FeaturizerConfig;
use crate::graph::{GconvConfig, GconvLayer};
use crate::tensor::Tensor;

/// Hyperparameters needed to rebuild a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub featurizer: FeaturizerConfig,
    pub gconv: GconvConfig,
    /// Hidden width of the edge and attention scorers.
    pub mlp_hidden: usize,
    pub classes: usize,
    pub beam_width: usize,
    /// Maximum number of hops `m`; paths hold at most `m + 1` nodes.
    pub max_hops: usize,
    pub alpha: f64,
    /// Dictionary entries per class.
    pub dict_k: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            featurizer: FeaturizerConfig::default(),
            gconv: GconvConfig::default(),
            mlp_hidden: 64,
            classes: 2,
            beam_width: 3,
            max_hops: 5,
            alpha: 0.1,
            dict_k: 5,
        }
    }
}

impl ModelConfig {
    pub fn hidden(&self) -> usize {
        self.gconv.hidden_dim
    }

    pub fn validate(&self) -> Result<()> {
        self.featurizer.validate()?;
        self.gconv.validate()?;
        if self.classes < 2 || self.beam_width < 1 || self.max_hops < 1 || self.dict_k < 1 {
            return Err(Error::Config(format!(
                "need classes >= 2, beam width >= 1, max hops >= 1, dict k >= 1; got {}, {}, {}, {}",
                self.classes, self.beam_width, self.max_hops, self.dict_k
            )));
        }
        if self.mlp_hidden < 1 || !self.alpha.is_finite() {
            return Err(Error::Config("mlp_hidden must be >= 1 and alpha finite".into()));
        }
        Ok(())
    }
}

/// Indices of every parameter block inside [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub gconv: Vec<(usize, Option<usize>)>,
    pub edge_src: usize,
    pub edge_dst: usize,
    pub edge_claim: usize,
    pub edge_bias: usize,
    pub edge_out: usize,
    pub attn_claim: usize,
    pub attn_node: usize,
    pub attn_bias: usize,
    pub attn_out: usize,
    /// Input weights, recurrent weights and biases for the
    /// input, forget, cell and output gates.
    pub lstm_w: [usize; 4],
    pub lstm_u: [usize; 4],
    pub lstm_b: [usize; 4],
    pub w_r: usize,
    pub w_g: usize,
    pub w_q: usize,
    pub w_k: usize,
    pub cls_weight: usize,
    pub cls_bias: usize,
}

enum Init {
    Xavier,
    Zeros,
}

/// Named parameter blocks in a fixed order.
///
/// Weights are stored for row-vector inputs: a block of shape `in x out`
/// maps a `1 x in` row to `1 x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub names: Vec<String>,
    pub tensors: Vec<Tensor>,
    pub layout: Layout,
}

struct Builder<'a> {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    rng: &'a mut ChaCha8Rng,
}

impl Builder<'_> {
    fn add(&mut self, name: &str, shape: [usize; 2], init: Init) -> usize {
        let t = match init {
            Init::Zeros => Tensor::zeros(&shape),
            Init::Xavier => {
                let a = libm::sqrt(6.0 / (shape[0] + shape[1]) as f64);
                let data = (0..shape[0] * shape[1])
                    .map(|_| self.rng.gen_range(-a..a))
                    .collect();
                Tensor::new(&shape, data).expect("shape")
            }
        };
        self.names.push(String::from(name));
        self.tensors.push(t);
        self.tensors.len() - 1
    }
}

impl ModelParams {
    /// Xavier-uniform weights and zero biases from `seed`.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.hidden();
        let h = config.mlp_hidden;
        let n = config.classes;
        let mut b = Builder {
            names: Vec::new(),
            tensors: Vec::new(),
            rng: &mut rng,
        };
        let mut gconv = Vec::new();
        let mut fan_in = config.featurizer.dim;
        for l in 0..config.gconv.layers {
            let w = b.add(&format!("gconv.{l}.weight"), [fan_in, d], Init::Xavier);
            let root = config
                .gconv
                .root_weight
                .then(|| b.add(&format!("gconv.{l}.root"), [fan_in, d], Init::Xavier));
            gconv.push((w, root));
            fan_in = d;
        }
        let edge_src = b.add("edge.src", [d, h], Init::Xavier);
        let edge_dst = b.add("edge.dst", [d, h], Init::Xavier);
        let edge_claim = b.add("edge.claim", [d, h], Init::Xavier);
        let edge_bias = b.add("edge.bias", [1, h], Init::Zeros);
        let edge_out = b.add("edge.out", [h, 1], Init::Xavier);
        let attn_claim = b.add("attn.claim", [d, h], Init::Xavier);
        let attn_node = b.add("attn.node", [d, h], Init::Xavier);
        let attn_bias = b.add("attn.bias", [1, h], Init::Zeros);
        let attn_out = b.add("attn.out", [h, 1], Init::Xavier);
        let gates = ["i", "f", "g", "o"];
        let mut lstm_w = [0; 4];
        let mut lstm_u = [0; 4];
        let mut lstm_b = [0; 4];
        for (k, gate) in gates.iter().enumerate() {
            lstm_w[k] = b.add(&format!("lstm.w_{gate}"), [d, d], Init::Xavier);
            lstm_u[k] = b.add(&format!("lstm.u_{gate}"), [d, d], Init::Xavier);
            lstm_b[k] = b.add(&format!("lstm.b_{gate}"), [1, d], Init::Zeros);
        }
        let w_r = b.add("head.w_r", [d, n], Init::Xavier);
        let w_g = b.add("head.w_g", [d, n], Init::Xavier);
        let w_q = b.add("dict.w_q", [d, d], Init::Xavier);
        let w_k = b.add("dict.w_k", [d, d], Init::Xavier);
        let cls_weight = b.add("classifier.weight", [d, n], Init::Xavier);
        let cls_bias = b.add("classifier.bias", [1, n], Init::Zeros);
        let Builder { names, tensors, .. } = b;
        Ok(Self {
            names,
            tensors,
            layout: Layout {
                gconv,
                edge_src,
                edge_dst,
                edge_claim,
                edge_bias,
                edge_out,
                attn_claim,
                attn_node,
                attn_bias,
                attn_out,
                lstm_w,
                lstm_u,
                lstm_b,
                w_r,
                w_g,
                w_q,
                w_k,
                cls_weight,
                cls_bias,
            },
        })
    }

    /// Replaces every block with the same-named tensor from `blocks`.
    /// Shapes must match the layout for `config`.
    pub fn from_named(config: &ModelConfig, blocks: &[(String, Tensor)]) -> Result<Self> {
        let mut params = Self::init(config, 0)?;
        if blocks.len() != params.names.len() {
            return Err(Error::Config(format!(
                "expected {} parameter blocks, got {}",
                params.names.len(),
                blocks.len()
            )));
        }
        for (i, name) in params.names.clone().iter().enumerate() {
            let (_, t) = blocks
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| Error::Config(format!("missing parameter block {name}")))?;
            if t.shape() != params.tensors[i].shape() {
                return Err(Error::Shape {
                    op: "load parameters",
                    left: params.tensors[i].shape().to_vec(),
                    right: t.shape().to_vec(),
                });
            }
            params.tensors[i] = t.clone();
        }
        Ok(params)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn norms(&self) -> Vec<(String, f64)> {
        self.names
            .iter()
            .cloned()
            .zip(self.tensors.iter().map(Tensor::norm))
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    /// Places every block on `tape`.
    pub fn bind(&self, tape: &mut Tape, requires_grad: bool) -> Bound {
        let vars = self
            .tensors
            .iter()
            .map(|t| tape.leaf(t.clone(), requires_grad))
            .collect();
        Bound {
            vars,
            layout: self.layout.clone(),
        }
    }
}

/// Parameter blocks placed on a tape.
#[derive(Debug, Clone)]
pub struct Bound {
    pub vars: Vec<Var>,
    pub layout: Layout,
}

impl Bound {
    pub fn get(&self, idx: usize) -> Var {
        self.vars[idx]
    }

    pub fn gconv_layers(&self) -> Vec<GconvLayer> {
        self.layout
            .gconv
            .iter()
            .map(|(w, r)| GconvLayer {
                weight: self.vars[*w],
                root: r.map(|r| self.vars[r]),
            })
            .collect()
    }
}
