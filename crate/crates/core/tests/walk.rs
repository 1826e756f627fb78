mod common;

use causalwalk_core::graph::gconv_forward;
use causalwalk_core::walk::beam::{beam_search_paths, path_length};
use causalwalk_core::walk::dictionary::{expected_graph_rep, prepare_attention};
use causalwalk_core::walk::encode::{encode_path, graph_summary};
use causalwalk_core::walk::head::{intervene, path_only_classify};
use causalwalk_core::walk::model::{
    compute_losses, cross_entropy, evidence_supervision_loss, forward_causal,
};
use causalwalk_core::walk::train::{example_gradients, TrainConfig};
use causalwalk_core::walk::transition::{
    edge_scores, path_log_prob_var, path_probability, transition_probs, walk_mask,
};
use causalwalk_core::walk::{ModelConfig, ModelParams, TransitionMatrix};
use causalwalk_core::{ClaimEvidenceGraph, Error, Tape, Tensor};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Setup {
    config: ModelConfig,
    graph: ClaimEvidenceGraph,
    params: ModelParams,
}

fn setup(seed: u64, nodes: usize, classes: usize) -> Setup {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = small_config(10, 5, classes);
    let graph = random_graph(&mut rng, nodes, 10);
    let params = random_params(&mut rng, &config, 0.7);
    Setup { config, graph, params }
}

/// Row-stochastic matrix over a random neighbor mask (self steps never
/// allowed); rows without neighbors stay zero.
fn random_transitions(rng: &mut ChaCha8Rng, n: usize, density: f64) -> TransitionMatrix {
    let mut mask = vec![false; n * n];
    let mut probs = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut row = Vec::new();
        for j in 0..n {
            if i != j && rng.gen_bool(density) {
                mask[i * n + j] = true;
                row.push((j, rng.gen_range(0.05..1.0)));
            }
        }
        let total: f64 = row.iter().map(|(_, w)| w).sum();
        for (j, w) in row {
            probs[i][j] = w / total;
        }
    }
    TransitionMatrix::new(to_t(&probs), mask).unwrap()
}

#[test]
fn edge_scores_by_hand() {
    // d = 1, hidden = 1 block values chosen so every term is visible.
    let mut config = small_config(8, 4, 2);
    config.mlp_hidden = 1;
    let mut p = ModelParams::init(&config, 0).unwrap();
    let l = p.layout.clone();
    let set = |p: &mut ModelParams, idx: usize, v: f64| {
        p.tensors[idx].data_mut().iter_mut().for_each(|x| *x = 0.0);
        p.tensors[idx].data_mut()[0] = v;
    };
    set(&mut p, l.edge_src, 0.5);
    set(&mut p, l.edge_dst, -0.25);
    set(&mut p, l.edge_claim, 2.0);
    set(&mut p, l.edge_bias, 0.1);
    set(&mut p, l.edge_out, 3.0);
    let x = [0.4, -1.0, 2.0];
    let mut nodes = Tensor::zeros(&[3, 4]);
    for (i, v) in x.iter().enumerate() {
        nodes.set(i, 0, *v);
    }
    let mut tape = Tape::new();
    let b = p.bind(&mut tape, false);
    let nv = tape.constant(nodes);
    let s = edge_scores(&mut tape, nv, &b).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let expected = 3.0 * (0.5 * x[i] - 0.25 * x[j] + 2.0 * x[0] + 0.1).tanh();
            assert!((tape.value(s).get(i, j) - expected).abs() < 1e-15);
        }
    }
    // Direction matters.
    assert!((tape.value(s).get(1, 2) - tape.value(s).get(2, 1)).abs() > 1e-3);
}

#[test]
fn transitions_match_reference() {
    for seed in 0..5 {
        let s = setup(seed, 6, 2);
        let x = gcn_reference(&s.graph, &s.params);
        let scores = edge_scores_reference(&x, &s.params);
        let mut tape = Tape::new();
        let b = s.params.bind(&mut tape, false);
        let nodes = tape.constant(to_t(&x));
        let sv = edge_scores(&mut tape, nodes, &b).unwrap();
        assert!(max_diff_m(&to_m(tape.value(sv)), &scores) < 1e-12);
        let (_, t) = transition_probs(&mut tape, sv, &walk_mask(&s.graph.adjacency)).unwrap();
        let expected = transition_reference(&scores);
        assert!(max_diff_m(&to_m(&t.probs), &expected) < 1e-12);
        for i in 0..6 {
            assert_eq!(t.prob(i, i), 0.0);
            assert!((t.probs.row_slice(i).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn path_probabilities() {
    let t = TransitionMatrix::new(
        to_t(&vec![
            vec![0.0, 0.25, 0.75],
            vec![0.5, 0.0, 0.5],
            vec![0.9, 0.1, 0.0],
        ]),
        (0..9).map(|k| k / 3 != k % 3).collect(),
    )
    .unwrap();
    assert_eq!(path_probability(&[0], &t).unwrap(), 1.0);
    assert!((path_probability(&[0, 2, 1], &t).unwrap() - 0.075).abs() < 1e-15);
    assert_eq!(
        path_probability(&[0, 0], &t).unwrap_err(),
        Error::NotNeighbor { from: 0, to: 0 }
    );
    let mut tape = Tape::new();
    let p = tape.constant(t.probs.clone());
    let lp = path_log_prob_var(&mut tape, p, &[0, 2, 1]).unwrap();
    assert!((tape.value(lp).item() - 0.075f64.ln()).abs() < 1e-14);
}

fn brute_force_top(t: &TransitionMatrix, width: usize, max_hops: usize) -> Vec<(Vec<usize>, f64)> {
    let n = t.num_nodes();
    let len = path_length(n, max_hops);
    let mut all = enumerate_paths(&to_m(&t.probs), len);
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(width);
    all
}

#[test]
fn beam_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0;
    while checked < 50 {
        let n = rng.gen_range(2..=6);
        let max_hops = rng.gen_range(1..=3);
        let t = random_transitions(&mut rng, n, 0.7);
        let len = path_length(n, max_hops);
        let all = enumerate_paths(&to_m(&t.probs), len);
        if all.is_empty() {
            continue;
        }
        let width = all.len() + rng.gen_range(0..3);
        let beam = beam_search_paths(&t, width, max_hops);
        let expected = brute_force_top(&t, width, max_hops);
        assert_eq!(beam.paths.len(), expected.len());
        for (got, (nodes, prob)) in beam.paths.iter().zip(&expected) {
            assert_eq!(&got.nodes, nodes);
            assert!((got.prob - prob).abs() <= 1e-12 * prob);
        }
        checked += 1;
    }
}

#[test]
fn uniform_ties_break_by_node_order() {
    let n = 4;
    let probs: M = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 / 3.0 }).collect())
        .collect();
    let t = TransitionMatrix::new(to_t(&probs), (0..n * n).map(|k| k / n != k % n).collect()).unwrap();
    let beam = beam_search_paths(&t, 6, 3);
    let order: Vec<Vec<usize>> = beam.paths.iter().map(|p| p.nodes.clone()).collect();
    assert_eq!(
        order,
        vec![
            vec![0, 1, 2, 3],
            vec![0, 1, 3, 2],
            vec![0, 2, 1, 3],
            vec![0, 2, 3, 1],
            vec![0, 3, 1, 2],
            vec![0, 3, 2, 1],
        ]
    );
    let beam = beam_search_paths(&t, 2, 3);
    assert_eq!(beam.paths[0].nodes, vec![0, 1, 2, 3]);
    assert_eq!(beam.paths[1].nodes, vec![0, 1, 3, 2]);
}

#[test]
fn width_one_is_greedy() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..30 {
        let n = rng.gen_range(3..=7);
        let t = random_transitions(&mut rng, n, 1.0);
        let mut path = vec![0];
        while path.len() < path_length(n, 5) {
            let last = *path.last().unwrap();
            let next = (0..n)
                .filter(|j| !path.contains(j))
                .fold(None::<usize>, |best, j| match best {
                    Some(b) if t.prob(last, b) >= t.prob(last, j) => Some(b),
                    _ => Some(j),
                })
                .unwrap();
            path.push(next);
        }
        assert_eq!(beam_search_paths(&t, 1, 5).paths[0].nodes, path);
    }
}

#[test]
fn path_length_rule() {
    assert_eq!(path_length(13, 5), 6);
    assert_eq!(path_length(4, 5), 4);
    assert_eq!(path_length(2, 5), 2);
    assert_eq!(path_length(1, 5), 1);
}

#[test]
fn summary_and_encoder_match_reference() {
    for seed in 0..4 {
        let s = setup(100 + seed, 5, 2);
        let x = gcn_reference(&s.graph, &s.params);
        let mut tape = Tape::new();
        let b = s.params.bind(&mut tape, false);
        let nodes = tape.constant(to_t(&x));
        let summary = graph_summary(&mut tape, nodes, &b).unwrap();
        let g = summary_reference(&x, &s.params);
        assert!(max_diff(tape.value(summary.rep).data(), &g) < 1e-12);
        let w = tape.value(summary.weights.unwrap()).data().to_vec();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let path = [0, 3, 1, 4];
        let rep = encode_path(&mut tape, nodes, &path, summary.rep, &b).unwrap();
        assert!(max_diff(tape.value(rep).data(), &lstm_reference(&x, &path, &g, &s.params)) < 1e-12);
    }
}

#[test]
fn claim_only_summary_is_zero() {
    let s = setup(1, 1, 2);
    let mut tape = Tape::new();
    let b = s.params.bind(&mut tape, false);
    let nodes = tape.constant(Tensor::filled(&[1, 5], 0.3));
    let summary = graph_summary(&mut tape, nodes, &b).unwrap();
    assert!(tape.value(summary.rep).data().iter().all(|v| *v == 0.0));
    assert!(summary.weights.is_none());
}

#[test]
fn encoder_zero_fixed_point() {
    // Zero inputs, zero state and zero biases keep the state at zero:
    // c = sigmoid(0) * 0 + sigmoid(0) * tanh(0) = 0.
    let s = setup(2, 4, 2);
    let mut p = s.params.clone();
    for idx in p.layout.lstm_b {
        p.tensors[idx].data_mut().iter_mut().for_each(|v| *v = 0.0);
    }
    let mut tape = Tape::new();
    let b = p.bind(&mut tape, false);
    let nodes = tape.constant(Tensor::zeros(&[4, 5]));
    let init = tape.constant(Tensor::zeros(&[1, 5]));
    let rep = encode_path(&mut tape, nodes, &[0, 1, 2, 3], init, &b).unwrap();
    assert!(tape.value(rep).data().iter().all(|v| *v == 0.0));
}

#[test]
fn encoder_is_order_sensitive() {
    let s = setup(3, 4, 2);
    let x = gcn_reference(&s.graph, &s.params);
    let g = summary_reference(&x, &s.params);
    let a = lstm_reference(&x, &[0, 1, 2], &g, &s.params);
    let b = lstm_reference(&x, &[0, 2, 1], &g, &s.params);
    assert!(max_diff(&a, &b) > 1e-6);
}

#[test]
fn heads_match_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for classes in [2, 3] {
        let config = small_config(8, 6, classes);
        let p = random_params(&mut rng, &config, 0.8);
        let dict = random_dictionary(&mut rng, &config);
        let rep: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut tape = Tape::new();
        let b = p.bind(&mut tape, false);
        let rv = tape.constant(Tensor::row(&rep));
        let l_r = path_only_classify(&mut tape, rv, &b).unwrap();
        let l_r_ref = classify_reference(&rep, &p);
        assert!(max_diff(tape.value(l_r).data(), &l_r_ref) < 1e-12);

        let att = prepare_attention(&mut tape, &dict, &b).unwrap();
        let e = expected_graph_rep(&mut tape, rv, l_r, &att, &b).unwrap();
        let e_ref = expected_rep_reference(&rep, &l_r_ref, &dict, &p);
        assert!(max_diff(tape.value(e).data(), &e_ref) < 1e-12);

        for alpha in [0.0, 0.1, 2.0] {
            let out = intervene(&mut tape, rv, e, &b, alpha).unwrap();
            let want = intervene_reference(&rep, &e_ref, &p, alpha);
            assert!(max_diff(tape.value(out).data(), &want) < 1e-12);
        }
    }
}

#[test]
fn alpha_zero_is_plain_softmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let config = small_config(8, 4, 3);
    let p = random_params(&mut rng, &config, 1.0);
    let rep = Tensor::row(&[0.3, -0.7, 1.2, 0.05]);
    let mut tape = Tape::new();
    let b = p.bind(&mut tape, false);
    let rv = tape.constant(rep.clone());
    let e = tape.constant(Tensor::row(&[5.0, -3.0, 2.0, 9.0]));
    let out = intervene(&mut tape, rv, e, &b, 0.0).unwrap();
    let direct = tape.matmul(rv, b.get(p.layout.w_r)).unwrap();
    let plain = tape.row_softmax(direct).unwrap();
    assert_eq!(tape.value(out), tape.value(plain));
    // A zero confounder projection gives the same result for any alpha.
    let mut p0 = p.clone();
    p0.tensors[p.layout.w_g].data_mut().iter_mut().for_each(|v| *v = 0.0);
    let b0 = p0.bind(&mut tape, false);
    let out0 = intervene(&mut tape, rv, e, &b0, 0.7).unwrap();
    assert_eq!(tape.value(out0), tape.value(plain));
}

#[test]
fn forward_matches_composition() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for classes in [2, 3] {
        let config = small_config(10, 5, classes);
        let graph = random_graph(&mut rng, 5, 10);
        let p = random_params(&mut rng, &config, 0.7);
        let dict = random_dictionary(&mut rng, &config);
        let mut tape = Tape::new();
        let b = p.bind(&mut tape, false);
        let fwd = forward_causal(&mut tape, &graph, &b, &dict, &config).unwrap();
        let out = fwd.output(&tape);

        let x = gcn_reference(&graph, &p);
        let t = transition_reference(&edge_scores_reference(&x, &p));
        let g = summary_reference(&x, &p);
        assert_eq!(out.per_path.len(), 3);
        let probs: Vec<f64> = out
            .per_path
            .iter()
            .map(|(path, _, _)| path.nodes.windows(2).map(|w| t[w[0]][w[1]]).product())
            .collect();
        let total: f64 = probs.iter().sum();
        let mut l_causal = vec![0.0; classes];
        let mut l_pred = vec![0.0; classes];
        for ((path, l_r, inter), prob) in out.per_path.iter().zip(&probs) {
            assert_eq!(path.nodes.len(), 5);
            assert!((path.prob - prob).abs() < 1e-12);
            let rep = lstm_reference(&x, &path.nodes, &g, &p);
            let l_r_ref = classify_reference(&rep, &p);
            let e = expected_rep_reference(&rep, &l_r_ref, &dict, &p);
            let inter_ref = intervene_reference(&rep, &e, &p, config.alpha);
            assert!(max_diff(l_r, &l_r_ref) < 1e-10);
            assert!(max_diff(inter, &inter_ref) < 1e-10);
            for c in 0..classes {
                l_causal[c] += prob / total * inter_ref[c];
                l_pred[c] += prob / total * l_r_ref[c];
            }
        }
        // Beam log-probabilities never increase.
        for w in out.per_path.windows(2) {
            assert!(w[0].0.log_prob >= w[1].0.log_prob);
        }
        assert!(max_diff(&out.l_causal, &l_causal) < 1e-10);
        assert!(max_diff(&out.l_pred, &l_pred) < 1e-10);
        assert!((out.beam_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((out.l_causal.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn two_node_graph_has_one_path() {
    let s = setup(9, 2, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let dict = random_dictionary(&mut rng, &s.config);
    let mut tape = Tape::new();
    let b = s.params.bind(&mut tape, false);
    let out = forward_causal(&mut tape, &s.graph, &b, &dict, &s.config).unwrap().output(&tape);
    assert_eq!(out.per_path.len(), 1);
    assert_eq!(out.per_path[0].0.nodes, vec![0, 1]);
    assert_eq!(out.per_path[0].0.prob, 1.0);
    assert_eq!(out.beam_weights, vec![1.0]);
    assert_eq!(out.l_causal, out.per_path[0].2);
}

#[test]
fn claim_only_graph_runs() {
    let s = setup(10, 1, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let dict = random_dictionary(&mut rng, &s.config);
    let mut tape = Tape::new();
    let b = s.params.bind(&mut tape, false);
    let fwd = forward_causal(&mut tape, &s.graph, &b, &dict, &s.config).unwrap();
    assert!(fwd.transitions.is_none());
    let out = fwd.output(&tape);
    assert_eq!(out.per_path[0].0.nodes, vec![0]);
    assert!((out.l_causal.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn loss_values() {
    let mut tape = Tape::new();
    let uniform = tape.constant(Tensor::row(&[1.0 / 3.0; 3]));
    let ce = cross_entropy(&mut tape, uniform, 1).unwrap();
    assert!((tape.value(ce).item() - 3f64.ln()).abs() < 1e-12);
    let onehot = tape.constant(Tensor::row(&[0.0, 1.0]));
    let ce = cross_entropy(&mut tape, onehot, 1).unwrap();
    assert_eq!(tape.value(ce).item(), 0.0);
    let ce = cross_entropy(&mut tape, onehot, 0).unwrap();
    assert!((tape.value(ce).item() - 1e-12f64.ln().abs()).abs() < 1e-9);
    assert!(cross_entropy(&mut tape, onehot, 2).is_err());

    let s = setup(12, 5, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let dict = random_dictionary(&mut rng, &s.config);
    let b = s.params.bind(&mut tape, false);
    let fwd = forward_causal(&mut tape, &s.graph, &b, &dict, &s.config).unwrap();
    let losses = compute_losses(&mut tape, &fwd, 1).unwrap();
    let (w, c, t) = (
        tape.value(losses.walk).item(),
        tape.value(losses.causal).item(),
        tape.value(losses.total).item(),
    );
    assert_eq!(t, w + c);
    assert!((c + tape.value(fwd.l_causal).data()[1].ln()).abs() < 1e-12);
}

/// Per-block relative error `|a - n| / (|a| + |n|)` in the 2-norm.
fn block_error(a: &[f64], n: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(n).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt() + n.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / (scale + 1e-8)
}

#[test]
fn full_model_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let config = small_config(8, 4, 2);
    let train = TrainConfig::default();
    for _ in 0..3 {
        let graph = random_graph(&mut rng, 4, 8).with_label(rng.gen_range(0..2));
        let p = random_params(&mut rng, &config, 0.8);
        let dict = random_dictionary(&mut rng, &config);
        let step = example_gradients(&graph, &p, &dict, &config, &train).unwrap();
        let loss = |q: &ModelParams| example_gradients(&graph, q, &dict, &config, &train).unwrap().loss_total;
        for (idx, name) in p.names.iter().enumerate() {
            let h = 1e-4;
            let numeric: Vec<f64> = (0..p.tensors[idx].len())
                .map(|k| {
                    let mut up = p.clone();
                    up.tensors[idx].data_mut()[k] += h;
                    let mut down = p.clone();
                    down.tensors[idx].data_mut()[k] -= h;
                    (loss(&up) - loss(&down)) / (2.0 * h)
                })
                .collect();
            let err = block_error(step.grads[idx].data(), &numeric);
            assert!(err < 1e-3, "{name}: {err}");
        }
    }
}

#[test]
fn evidence_loss_is_gold_mass_likelihood() {
    let s = setup(61, 6, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let dict = random_dictionary(&mut rng, &s.config);
    // Evidence nodes 2 and 4 are gold.
    let flags = [false, true, false, true, false];
    let graph = s.graph.clone().with_evidence_flags(&flags).unwrap();
    let node_flags = graph.evidence_flags.clone().unwrap();
    let mut tape = Tape::new();
    let b = s.params.bind(&mut tape, false);
    let fwd = forward_causal(&mut tape, &graph, &b, &dict, &s.config).unwrap();
    let loss = evidence_supervision_loss(&mut tape, &fwd, &node_flags).unwrap().unwrap();
    let t = &fwd.transitions.as_ref().unwrap().1;
    let rows = [(0, t.prob(0, 2) + t.prob(0, 4)), (2, t.prob(2, 4)), (4, t.prob(4, 2))];
    let want = -rows.iter().map(|(_, m)| m.ln()).sum::<f64>() / 3.0;
    assert!((tape.value(loss).item() - want).abs() < 1e-12);

    let none = [false; 6];
    let mut tape = Tape::new();
    let b = s.params.bind(&mut tape, false);
    let fwd = forward_causal(&mut tape, &graph, &b, &dict, &s.config).unwrap();
    assert!(evidence_supervision_loss(&mut tape, &fwd, &none).unwrap().is_none());
    assert!(evidence_supervision_loss(&mut tape, &fwd, &none[..3]).is_err());
}

#[test]
fn supervised_objective_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let config = small_config(8, 4, 2);
    let train = TrainConfig { evidence_supervision: true, ..TrainConfig::default() };
    let graph = random_graph(&mut rng, 5, 8)
        .with_label(1)
        .with_evidence_flags(&[true, false, true, false])
        .unwrap();
    let p = random_params(&mut rng, &config, 0.8);
    let dict = random_dictionary(&mut rng, &config);
    let step = example_gradients(&graph, &p, &dict, &config, &train).unwrap();
    assert!(step.loss_total > step.loss_walk + step.loss_causal);
    let loss = |q: &ModelParams| example_gradients(&graph, q, &dict, &config, &train).unwrap().loss_total;
    let h = 1e-4;
    for (idx, name) in p.names.iter().enumerate() {
        let numeric: Vec<f64> = (0..p.tensors[idx].len())
            .map(|k| {
                let mut up = p.clone();
                up.tensors[idx].data_mut()[k] += h;
                let mut down = p.clone();
                down.tensors[idx].data_mut()[k] -= h;
                (loss(&up) - loss(&down)) / (2.0 * h)
            })
            .collect();
        let err = block_error(step.grads[idx].data(), &numeric);
        assert!(err < 1e-3, "{name}: {err}");
    }
}

#[test]
fn dictionary_mismatch_is_rejected() {
    let s = setup(13, 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let dict = random_dictionary(&mut rng, &small_config(10, 5, 3));
    let mut tape = Tape::new();
    let b = s.params.bind(&mut tape, false);
    assert!(forward_causal(&mut tape, &s.graph, &b, &dict, &s.config).is_err());
}

#[test]
fn gconv_output_feeds_forward() {
    let s = setup(14, 4, 2);
    let mut tape = Tape::new();
    let b = s.params.bind(&mut tape, false);
    let h = gconv_forward(&mut tape, &s.graph, &b.gconv_layers(), &s.config.gconv).unwrap();
    assert_eq!(tape.shape(h), &[4, 5]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beam_invariants(seed in any::<u64>(), n in 2usize..8, width in 1usize..5, hops in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_transitions(&mut rng, n, 0.8);
        let beam = beam_search_paths(&t, width, hops);
        prop_assert!(beam.paths.len() <= width);
        for p in &beam.paths {
            prop_assert_eq!(p.nodes[0], 0);
            prop_assert!(p.prob > 0.0 && p.prob <= 1.0);
            let mut seen = p.nodes.clone();
            seen.sort();
            seen.dedup();
            prop_assert_eq!(seen.len(), p.nodes.len());
        }
        for w in beam.paths.windows(2) {
            prop_assert!(w[0].log_prob >= w[1].log_prob);
        }
    }

    #[test]
    fn transition_rows_are_distributions(seed in any::<u64>(), n in 2usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores = random_m(&mut rng, n, n, 20.0);
        let mut tape = Tape::new();
        let s = tape.constant(to_t(&scores));
        let mask: Vec<bool> = (0..n * n).map(|k| k / n != k % n).collect();
        let (_, t) = transition_probs(&mut tape, s, &mask).unwrap();
        for i in 0..n {
            prop_assert!((t.probs.row_slice(i).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert_eq!(t.prob(i, i), 0.0);
        }
    }
}
