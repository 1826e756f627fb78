mod common;

use causalwalk_core::walk::train::{
    evaluate, metrics_from_confusion, train, EvalMode, Objective, TrainConfig,
};
use causalwalk_core::walk::{init_confounder_dictionary, ModelParams};
use causalwalk_core::{ClaimEvidenceGraph, Error};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Graphs whose evidence rows lean toward `+v` or `-v` by class.
fn toy_set(seed: u64, count: usize, dim: usize) -> Vec<ClaimEvidenceGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..dim).map(|k| if k % 2 == 0 { 1.0 } else { -0.5 }).collect();
    (0..count)
        .map(|i| {
            let label = i % 2;
            let sign = if label == 0 { 1.0 } else { -1.0 };
            let nodes = rng.gen_range(3..6);
            let mut feats = random_m(&mut rng, nodes, dim, 0.3);
            for row in feats.iter_mut().skip(1) {
                for (x, d) in row.iter_mut().zip(&v) {
                    *x += sign * d;
                }
            }
            let texts = (0..nodes).map(|k| format!("n{k}")).collect();
            ClaimEvidenceGraph::from_features(texts, to_t(&feats)).unwrap().with_label(label)
        })
        .collect()
}

#[test]
fn separable_toy_task_is_learned() {
    let config = small_config(16, 8, 2);
    let train_set = toy_set(1, 50, 16);
    let test_set = toy_set(2, 50, 16);
    let mut good = 0;
    for seed in 0..5 {
        let tc = TrainConfig { seed, ..TrainConfig::default() };
        let model = train(&train_set, None, &config, &tc).unwrap();
        let m = evaluate(&test_set, &model.params, &model.dictionary, &config, EvalMode::Causal).unwrap();
        if m.accuracy >= 0.95 {
            good += 1;
        }
    }
    assert!(good >= 4, "{good}/5 seeds reached 0.95");
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let config = small_config(16, 8, 2);
    let data = toy_set(3, 12, 16);
    let tc = TrainConfig { lr: 0.0, epochs: 2, seed: 4, ..TrainConfig::default() };
    let model = train(&data, None, &config, &tc).unwrap();
    assert_eq!(model.params, ModelParams::init(&config, 4).unwrap());
}

#[test]
fn same_seed_same_trajectory() {
    let config = small_config(16, 8, 2);
    let data = toy_set(5, 16, 16);
    let dev = toy_set(6, 8, 16);
    let tc = TrainConfig { epochs: 3, seed: 11, ..TrainConfig::default() };
    let a = train(&data, Some(&dev), &config, &tc).unwrap();
    let b = train(&data, Some(&dev), &config, &tc).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.history.len(), 3);
    assert!(a.history.iter().all(|h| h.dev_accuracy.is_some()));
    for h in &a.history {
        assert!((h.loss_total - (h.loss_walk + h.loss_causal)).abs() < 1e-12);
    }
    let c = train(&data, Some(&dev), &config, &TrainConfig { seed: 12, ..tc }).unwrap();
    assert_ne!(a.params, c.params);
}

#[test]
fn modes_agree_when_heads_are_tied() {
    // With alpha = 0, W_r equal to the classifier weight and a zero
    // classifier bias, the intervened and path-only heads coincide.
    let mut config = small_config(16, 8, 2);
    config.alpha = 0.0;
    let data = toy_set(7, 20, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut p = random_params(&mut rng, &config, 0.5);
    let l = p.layout.clone();
    p.tensors[l.w_r] = p.tensors[l.cls_weight].clone();
    p.tensors[l.cls_bias].data_mut().iter_mut().for_each(|x| *x = 0.0);
    let dict = init_confounder_dictionary(&data, &p, &config, 0).unwrap();
    let a = evaluate(&data, &p, &dict, &config, EvalMode::Causal).unwrap();
    let b = evaluate(&data, &p, &dict, &config, EvalMode::WalkOnly).unwrap();
    assert_eq!(a, b);
}

#[test]
fn walk_only_objective_leaves_intervention_untouched() {
    let config = small_config(16, 8, 2);
    let data = toy_set(8, 12, 16);
    let tc = TrainConfig { epochs: 2, seed: 3, objective: Objective::WalkOnly, ..TrainConfig::default() };
    let model = train(&data, None, &config, &tc).unwrap();
    let init = ModelParams::init(&config, 3).unwrap();
    for name in ["head.w_r", "head.w_g", "dict.w_q", "dict.w_k"] {
        let i = init.index_of(name).unwrap();
        assert_eq!(model.params.tensors[i], init.tensors[i], "{name}");
    }
    let i = init.index_of("classifier.weight").unwrap();
    assert_ne!(model.params.tensors[i], init.tensors[i]);
}

#[test]
fn evidence_supervision_trains() {
    let config = small_config(16, 8, 2);
    let data: Vec<ClaimEvidenceGraph> = toy_set(9, 12, 16)
        .into_iter()
        .map(|g| {
            let n = g.num_evidence();
            let flags: Vec<bool> = (0..n).map(|k| k == 0).collect();
            g.with_evidence_flags(&flags).unwrap()
        })
        .collect();
    let tc = TrainConfig { epochs: 2, evidence_supervision: true, ..TrainConfig::default() };
    let model = train(&data, None, &config, &tc).unwrap();
    let h = &model.history[0];
    assert!(h.loss_total > h.loss_walk + h.loss_causal);
}

#[test]
fn error_cases() {
    let config = small_config(16, 8, 2);
    assert_eq!(train(&[], None, &config, &TrainConfig::default()).unwrap_err(), Error::EmptyDataset);
    let data = toy_set(10, 6, 16);
    let model = train(&data, None, &config, &TrainConfig { epochs: 1, ..TrainConfig::default() }).unwrap();
    assert_eq!(
        evaluate(&[], &model.params, &model.dictionary, &config, EvalMode::Causal).unwrap_err(),
        Error::EmptyDataset
    );
    let one_class: Vec<ClaimEvidenceGraph> = toy_set(11, 8, 16).into_iter().filter(|g| g.label == Some(0)).collect();
    assert!(matches!(
        train(&one_class, None, &config, &TrainConfig::default()),
        Err(Error::InsufficientClass { class: 1, have: 0, need: 2 })
    ));
}

#[test]
fn confusion_metrics() {
    let m = metrics_from_confusion(vec![vec![3, 1], vec![2, 4]], 0.5);
    assert_eq!(m.count, 10);
    assert!((m.accuracy - 0.7).abs() < 1e-15);
    assert!((m.precision[0] - 0.6).abs() < 1e-15);
    assert!((m.recall[1] - 4.0 / 6.0).abs() < 1e-15);
    assert_eq!(m.mean_transition_entropy, 0.5);
}
