//! Plain nested-`Vec` linear algebra used as an independent reference for
//! the tape-based implementation.

#![allow(dead_code)]

use causalwalk_core::walk::{ConfounderDictionary, ModelConfig, ModelParams};
use causalwalk_core::{ClaimEvidenceGraph, Tensor};
use rand::Rng;

pub type M = Vec<Vec<f64>>;

pub fn to_m(t: &Tensor) -> M {
    (0..t.rows()).map(|r| t.row_slice(r).to_vec()).collect()
}

pub fn to_t(m: &M) -> Tensor {
    Tensor::from_rows(m).unwrap()
}

pub fn mm(a: &M, b: &M) -> M {
    let (n, k, p) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        assert_eq!(a[i].len(), k);
        for j in 0..p {
            let mut s = 0.0;
            for t in 0..k {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn add(a: &M, b: &M) -> M {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect()
}

pub fn map(a: &M, f: impl Fn(f64) -> f64) -> M {
    a.iter().map(|r| r.iter().map(|&x| f(x)).collect()).collect()
}

pub fn hadamard(a: &M, b: &M) -> M {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).collect())
        .collect()
}

pub fn transpose(a: &M) -> M {
    (0..a[0].len())
        .map(|j| a.iter().map(|r| r[j]).collect())
        .collect()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn softmax(v: &[f64]) -> Vec<f64> {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

pub fn random_m<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> M {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(-scale..scale)).collect())
        .collect()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_diff_m(a: &M, b: &M) -> f64 {
    a.iter().zip(b).map(|(x, y)| max_diff(x, y)).fold(0.0, f64::max)
}

/// Small model configuration for fast tests.
pub fn small_config(dim: usize, hidden: usize, classes: usize) -> ModelConfig {
    let mut c = ModelConfig::default();
    c.featurizer.dim = dim;
    c.gconv.hidden_dim = hidden;
    c.mlp_hidden = hidden;
    c.classes = classes;
    c.dict_k = 2;
    c
}

/// Graph with random dense features and full connectivity.
pub fn random_graph<R: Rng>(rng: &mut R, nodes: usize, dim: usize) -> ClaimEvidenceGraph {
    let texts = (0..nodes).map(|i| format!("node {i}")).collect();
    let feats = random_m(rng, nodes, dim, 1.0);
    ClaimEvidenceGraph::from_features(texts, to_t(&feats)).unwrap()
}

/// Random parameters with biases also non-zero, so every block matters.
pub fn random_params<R: Rng>(rng: &mut R, config: &ModelConfig, scale: f64) -> ModelParams {
    let mut p = ModelParams::init(config, rng.gen()).unwrap();
    for t in &mut p.tensors {
        for x in t.data_mut() {
            *x = rng.gen_range(-scale..scale);
        }
    }
    p
}

pub fn random_dictionary<R: Rng>(rng: &mut R, config: &ModelConfig) -> ConfounderDictionary {
    let centers = (0..config.classes)
        .map(|_| to_t(&random_m(rng, config.dict_k, config.hidden(), 1.0)))
        .collect();
    ConfounderDictionary::new(centers).unwrap()
}

pub fn block(p: &ModelParams, idx: usize) -> M {
    to_m(&p.tensors[idx])
}

/// Dense reference of the GCN stack with symmetric normalization and
/// self-loops.
pub fn gcn_reference(graph: &ClaimEvidenceGraph, p: &ModelParams) -> M {
    let n = graph.num_nodes();
    let mut a = to_m(&graph.adjacency);
    for i in 0..n {
        a[i][i] = 1.0;
    }
    let deg: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    for i in 0..n {
        for j in 0..n {
            a[i][j] /= (deg[i] * deg[j]).sqrt();
        }
    }
    let mut h = to_m(&graph.features);
    for (w, root) in &p.layout.gconv {
        let mut pre = mm(&a, &mm(&h, &block(p, *w)));
        if let Some(r) = root {
            pre = add(&pre, &mm(&h, &block(p, *r)));
        }
        h = map(&pre, |x| x.max(0.0));
    }
    h
}

pub fn edge_scores_reference(x: &M, p: &ModelParams) -> M {
    let l = &p.layout;
    let (src, dst, cl, b, out) = (
        block(p, l.edge_src),
        block(p, l.edge_dst),
        block(p, l.edge_claim),
        block(p, l.edge_bias),
        block(p, l.edge_out),
    );
    let n = x.len();
    let mut s = vec![vec![0.0; n]; n];
    let claim = add(&mm(&vec![x[0].clone()], &cl), &b);
    for i in 0..n {
        for j in 0..n {
            let pre = add(
                &add(&mm(&vec![x[i].clone()], &src), &mm(&vec![x[j].clone()], &dst)),
                &claim,
            );
            let h = map(&pre, f64::tanh);
            s[i][j] = mm(&h, &out)[0][0];
        }
    }
    s
}

/// Row softmax over `j != i` with zeros on the diagonal.
pub fn transition_reference(scores: &M) -> M {
    let n = scores.len();
    (0..n)
        .map(|i| {
            let others: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| scores[i][j]).collect();
            let sm = softmax(&others);
            let mut row = vec![0.0; n];
            let mut k = 0;
            for j in 0..n {
                if j != i {
                    row[j] = sm[k];
                    k += 1;
                }
            }
            row
        })
        .collect()
}

pub fn summary_reference(x: &M, p: &ModelParams) -> Vec<f64> {
    let l = &p.layout;
    let d = x[0].len();
    if x.len() == 1 {
        return vec![0.0; d];
    }
    let claim = add(&mm(&vec![x[0].clone()], &block(p, l.attn_claim)), &block(p, l.attn_bias));
    let scores: Vec<f64> = x[1..]
        .iter()
        .map(|xi| {
            let pre = add(&claim, &mm(&vec![xi.clone()], &block(p, l.attn_node)));
            mm(&map(&pre, f64::tanh), &block(p, l.attn_out))[0][0]
        })
        .collect();
    let a = softmax(&scores);
    let mut rep = vec![0.0; d];
    for (w, xi) in a.iter().zip(&x[1..]) {
        for k in 0..d {
            rep[k] += w * xi[k];
        }
    }
    rep
}

pub fn lstm_reference(x: &M, path: &[usize], init: &[f64], p: &ModelParams) -> Vec<f64> {
    let l = &p.layout;
    let mut h = vec![init.to_vec()];
    let mut c = vec![init.to_vec()];
    for &node in path {
        let xi = vec![x[node].clone()];
        let gate = |k: usize, h: &M| {
            add(
                &add(&mm(&xi, &block(p, l.lstm_w[k])), &mm(h, &block(p, l.lstm_u[k]))),
                &block(p, l.lstm_b[k]),
            )
        };
        let i = map(&gate(0, &h), sigmoid);
        let f = map(&gate(1, &h), sigmoid);
        let g = map(&gate(2, &h), f64::tanh);
        let o = map(&gate(3, &h), sigmoid);
        c = add(&hadamard(&f, &c), &hadamard(&i, &g));
        h = hadamard(&o, &map(&c, f64::tanh));
    }
    h.remove(0)
}

pub fn classify_reference(rep: &[f64], p: &ModelParams) -> Vec<f64> {
    let l = &p.layout;
    let logits = add(&mm(&vec![rep.to_vec()], &block(p, l.cls_weight)), &block(p, l.cls_bias));
    softmax(&logits[0])
}

pub fn expected_rep_reference(
    rep: &[f64],
    l_r: &[f64],
    dict: &ConfounderDictionary,
    p: &ModelParams,
) -> Vec<f64> {
    let l = &p.layout;
    let q = mm(&vec![rep.to_vec()], &block(p, l.w_q));
    let n = dict.classes();
    let d = rep.len();
    let mut out = vec![0.0; d];
    for (class, centers) in dict.centers.iter().enumerate() {
        let z = to_m(centers);
        let keys = mm(&z, &block(p, l.w_k));
        let scores: Vec<f64> = keys
            .iter()
            .map(|k| k.iter().zip(&q[0]).map(|(a, b)| a * b).sum())
            .collect();
        let w = softmax(&scores);
        for (wi, zi) in w.iter().zip(&z) {
            for k in 0..d {
                out[k] += l_r[class] * wi * zi[k] / n as f64;
            }
        }
    }
    out
}

pub fn intervene_reference(rep: &[f64], expected: &[f64], p: &ModelParams, alpha: f64) -> Vec<f64> {
    let l = &p.layout;
    let a = mm(&vec![rep.to_vec()], &block(p, l.w_r));
    let b = mm(&vec![expected.to_vec()], &block(p, l.w_g));
    let logits: Vec<f64> = a[0].iter().zip(&b[0]).map(|(x, y)| x + alpha * y).collect();
    softmax(&logits)
}

/// Every no-revisit path from node 0 with exactly `len` nodes, with its
/// probability under `t`.
pub fn enumerate_paths(t: &M, len: usize) -> Vec<(Vec<usize>, f64)> {
    let n = t.len();
    let mut out = Vec::new();
    let mut stack = vec![(vec![0usize], 1.0f64)];
    while let Some((path, prob)) = stack.pop() {
        if path.len() == len {
            out.push((path, prob));
            continue;
        }
        let last = *path.last().unwrap();
        for j in 0..n {
            if !path.contains(&j) && t[last][j] > 0.0 {
                let mut next = path.clone();
                next.push(j);
                stack.push((next, prob * t[last][j]));
            }
        }
    }
    out
}
