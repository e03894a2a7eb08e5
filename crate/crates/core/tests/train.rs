use tigt_core::graph::generate_csl_dataset;
use tigt_core::graph::CSL_SKIPS;
use tigt_core::model::{GraphInput, PathMode, TigtConfig};
use tigt_core::tensor::Tensor;
use tigt_core::topology::graph_clique_adjacency;
use tigt_core::train::*;

fn tiny_model() -> TigtConfig {
    TigtConfig { hidden_dim: 8, num_heads: 2, reduction_factor: 2, num_layers: 1, ..Default::default() }
}

fn tiny_train(epochs: usize) -> TrainConfig {
    TrainConfig { epochs, copies_per_class: 5, seeds: vec![0, 1], ..Default::default() }
}

#[test]
fn csl_split_is_stratified_90_30_30() {
    let labels: Vec<usize> = (0..10).flat_map(|c| std::iter::repeat_n(c, 15)).collect();
    let s = stratified_split(&labels, [0.6, 0.2, 0.2], 3).unwrap();
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (90, 30, 30));
    for class in 0..10 {
        let count = |idx: &[usize]| idx.iter().filter(|&&i| labels[i] == class).count();
        assert_eq!((count(&s.train), count(&s.val), count(&s.test)), (9, 3, 3));
    }
    let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..150).collect::<Vec<_>>());
    assert_eq!(s, stratified_split(&labels, [0.6, 0.2, 0.2], 3).unwrap());
    assert_ne!(s, stratified_split(&labels, [0.6, 0.2, 0.2], 4).unwrap());
}

#[test]
fn split_edge_cases() {
    let labels = vec![0, 0, 1, 1, 1];
    let all_train = stratified_split(&labels, [1.0, 0.0, 0.0], 0).unwrap();
    assert_eq!(all_train.train, vec![0, 1, 2, 3, 4]);
    assert!(all_train.val.is_empty() && all_train.test.is_empty());
    assert!(matches!(stratified_split(&labels, [0.6, 0.2, 0.2], 0), Err(TrainError::Split(_))));
    assert!(stratified_split(&labels, [0.5, 0.2, 0.2], 0).is_err());
}

#[test]
fn adam_minimizes_quadratic_bowl() {
    let mut w = vec![Tensor::new(&[3], vec![1.0, -0.5, 0.3]).unwrap()];
    let mut state = AdamState::new(&w);
    let mut reached = None;
    for step in 1..=500 {
        let grad: Vec<f64> = w[0].data().iter().map(|x| 2.0 * x).collect();
        adam_step(&mut w, &[Some(grad)], &mut state, 0.01, 0.0);
        let norm2: f64 = w[0].data().iter().map(|x| x * x).sum();
        if norm2 < 1e-3 {
            reached = Some(step);
            break;
        }
    }
    assert!(reached.is_some(), "‖w‖² stayed above 1e-3 for 500 steps");
}

#[test]
fn adam_step_basics() {
    let start = Tensor::new(&[2], vec![0.7, -1.2]).unwrap();
    let mut w = vec![start.clone()];
    let mut state = AdamState::new(&w);
    adam_step(&mut w, &[Some(vec![0.0, 0.0])], &mut state, 0.1, 0.0);
    assert_eq!(w[0], start);

    let mut w = vec![start.clone()];
    let mut state = AdamState::new(&w);
    adam_step(&mut w, &[Some(vec![3.0, -0.02])], &mut state, 0.01, 0.0);
    let moved: Vec<f64> = w[0].data().iter().zip(start.data()).map(|(a, b)| a - b).collect();
    assert!((moved[0] + 0.01).abs() < 1e-6 && (moved[1] - 0.01).abs() < 1e-6, "{moved:?}");

    let mut w = vec![start.clone()];
    let mut state = AdamState::new(&w);
    adam_step(&mut w, &[None], &mut state, 0.1, 0.5);
    assert_eq!(w[0], start);
}

#[test]
fn clique_cache_matches_recomputation() {
    let train = TrainConfig::default();
    let model = TigtConfig::default();
    let inputs = csl_inputs(&model, &train).unwrap();
    let samples = generate_csl_dataset(41, &CSL_SKIPS, 15, train.dataset_seed).unwrap();
    for i in (0..150).step_by(15) {
        let fresh = graph_clique_adjacency(&samples[i].graph, None).matrix.to_f64();
        assert_eq!(inputs[i].clique_adjacency.data(), fresh.as_slice());
        assert_eq!(inputs[i].label, samples[i].label);
    }
}

#[test]
fn untrained_model_is_near_chance() {
    let report = train_csl(&TigtConfig::default(), &TrainConfig { epochs: 0, ..Default::default() }).unwrap();
    assert_eq!(report.seeds.len(), 4);
    assert!(report.seeds.iter().all(|s| s.best_epoch == 0 && s.epoch_losses.is_empty()));
    assert!(report.mean_test_accuracy <= 0.3, "{}", report.mean_test_accuracy);
}

#[test]
fn training_is_deterministic_and_reduces_loss() {
    let a = train_csl(&tiny_model(), &tiny_train(4)).unwrap();
    let b = train_csl(&tiny_model(), &tiny_train(4)).unwrap();
    assert_eq!(a.seeds.iter().map(|s| &s.epoch_losses).collect::<Vec<_>>(), b.seeds.iter().map(|s| &s.epoch_losses).collect::<Vec<_>>());
    assert_eq!(a.mean_test_accuracy, b.mean_test_accuracy);
    for s in &a.seeds {
        assert!(s.epoch_losses.last().unwrap() < s.epoch_losses.first().unwrap(), "{:?}", s.epoch_losses);
        assert_eq!(s.val_accuracies.len(), 4);
    }
}

#[test]
fn parallel_seeds_match_sequential() {
    let seq = train_csl(&tiny_model(), &tiny_train(2)).unwrap();
    let par = train_csl(&tiny_model(), &TrainConfig { workers: 2, ..tiny_train(2) }).unwrap();
    for (a, b) in seq.seeds.iter().zip(&par.seeds) {
        assert_eq!(a.epoch_losses, b.epoch_losses);
        assert_eq!(a.test_accuracy, b.test_accuracy);
    }
}

#[test]
fn single_seed_reports_zero_std() {
    let r = train_csl(&tiny_model(), &TrainConfig { seeds: vec![5], ..tiny_train(1) }).unwrap();
    assert_eq!(r.std_test_accuracy, 0.0);
    assert_eq!(mean_std(&[0.5, 1.0]), (0.75, 0.25));
}

#[test]
fn non_finite_loss_is_reported() {
    let model = tiny_model();
    let train = tiny_train(1);
    let mut inputs = csl_inputs(&model, &train).unwrap();
    for g in &mut inputs {
        g.features.data_mut()[0] = f64::NAN;
    }
    let err = train_on(&model, &train, &inputs).unwrap_err();
    assert!(matches!(err, TrainError::NonFinite { epoch: 1, .. }), "{err}");
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        TrainConfig { batch_size: 0, ..Default::default() },
        TrainConfig { learning_rate: 0.0, ..Default::default() },
        TrainConfig { seeds: vec![], ..Default::default() },
        TrainConfig { train_fraction: 0.9, ..Default::default() },
    ];
    for t in bad {
        assert!(matches!(train_csl(&TigtConfig::default(), &t), Err(TrainError::Config(_))));
    }
}

#[test]
fn ablation_variants_flip_one_switch_each() {
    let base = TigtConfig::default();
    let variants = ablation_variants(&base);
    assert_eq!(variants.len(), 8);
    assert_eq!(variants[0].1, base);
    let single = variants.iter().find(|(n, _)| n == "single_path").unwrap();
    assert_eq!(single.1.dual_path, PathMode::Single);
    for (name, cfg) in &variants[1..] {
        let a = serde_json::to_value(&base).unwrap();
        let b = serde_json::to_value(cfg).unwrap();
        let changed = a.as_object().unwrap().iter().filter(|(k, v)| b[k.as_str()] != **v).count();
        assert_eq!(changed, 1, "{name}");
    }
}

#[test]
fn ablation_suite_writes_a_row_per_variant() {
    let table = run_ablation_suite(&tiny_model(), &TrainConfig { seeds: vec![0], ..tiny_train(1) }).unwrap();
    assert_eq!(table.rows.len(), 8);
    assert!(table.full().is_some());
    let mut csv = Vec::new();
    table.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.starts_with("variant,mean_accuracy,std_accuracy,parameter_count,flagged"));
}

#[test]
fn inputs_expose_label_and_shapes() {
    let samples = generate_csl_dataset(41, &[2, 3], 1, 0).unwrap();
    let g = GraphInput::from_graph(&samples[1].graph, samples[1].label, 1, None).unwrap();
    assert_eq!(g.label, 1);
    assert_eq!(g.adjacency.shape(), &[41, 41]);
    assert_eq!(g.features.data().iter().sum::<f64>(), 41.0);
}
