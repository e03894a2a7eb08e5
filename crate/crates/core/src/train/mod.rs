//! CSL training loop, optimizer, splits and the ablation suite.

mod adam;
mod ablation;
mod split;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{generate_csl_dataset, GraphError, CSL_SKIPS};
use crate::model::{GraphInput, ModelError, Tigt, TigtConfig};
use crate::tensor::{Tape, TensorError};

pub use ablation::{ablation_variants, run_ablation_suite, AblationRow, AblationTable};
pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use split::{stratified_split, Split};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("split: {0}")]
    Split(String),
    #[error("non-finite loss at seed {seed}, epoch {epoch}: {detail}")]
    NonFinite { seed: u64, epoch: usize, detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Optimization and dataset settings. Defaults are the CSL settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub weight_decay: f64,
    pub seeds: Vec<u64>,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub num_nodes: usize,
    pub copies_per_class: usize,
    pub dataset_seed: u64,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 4,
            learning_rate: 1e-3,
            epochs: 200,
            weight_decay: 1e-5,
            seeds: vec![0, 1, 2, 3],
            train_fraction: 0.6,
            val_fraction: 0.2,
            test_fraction: 0.2,
            num_nodes: 41,
            copies_per_class: 15,
            dataset_seed: 0,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.batch_size == 0 {
            return fail("batch_size must be positive");
        }
        if self.learning_rate.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || !self.learning_rate.is_finite() {
            return fail("learning_rate must be positive");
        }
        if self.weight_decay < 0.0 {
            return fail("weight_decay must be non-negative");
        }
        if self.seeds.is_empty() {
            return fail("at least one seed is required");
        }
        let fractions = [self.train_fraction, self.val_fraction, self.test_fraction];
        if fractions.iter().any(|f| *f < 0.0) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return fail("split fractions must be non-negative and sum to 1");
        }
        if self.copies_per_class == 0 {
            return fail("copies_per_class must be positive");
        }
        Ok(())
    }
}

/// Outcome of one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub epoch_losses: Vec<f64>,
    pub val_accuracies: Vec<f64>,
    /// Epoch whose parameters were selected; 0 means the untrained model.
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub test_accuracy: f64,
    pub seconds: f64,
}

/// Aggregate over seeds. `std_test_accuracy` is the population standard
/// deviation, so a single seed reports 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: TigtConfig,
    pub train: TrainConfig,
    pub parameter_count: usize,
    pub seeds: Vec<SeedReport>,
    pub mean_test_accuracy: f64,
    pub std_test_accuracy: f64,
}

/// Labelled CSL graphs with `A_C` computed once per graph.
pub fn csl_inputs(model: &TigtConfig, train: &TrainConfig) -> Result<Vec<GraphInput>, TrainError> {
    let samples = generate_csl_dataset(train.num_nodes, &CSL_SKIPS, train.copies_per_class, train.dataset_seed)?;
    samples
        .iter()
        .map(|s| GraphInput::from_graph(&s.graph, s.label, model.input_dim, model.max_cycle_len).map_err(TrainError::from))
        .collect()
}

/// Trains every seed on the CSL task and aggregates test accuracy.
pub fn train_csl(model: &TigtConfig, train: &TrainConfig) -> Result<RunReport, TrainError> {
    train.validate()?;
    model.validate()?;
    let inputs = csl_inputs(model, train)?;
    train_on(model, train, &inputs)
}

/// Like [`train_csl`] with a prepared dataset.
pub fn train_on(model: &TigtConfig, train: &TrainConfig, inputs: &[GraphInput]) -> Result<RunReport, TrainError> {
    train.validate()?;
    let parameter_count = Tigt::new(model.clone(), 0)?.count_parameters();
    let run = |seed: &u64| train_seed(model, train, inputs, *seed);
    let seeds: Vec<SeedReport> = if train.workers > 1 && train.seeds.len() > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(train.workers)
            .build()
            .map_err(|e| TrainError::Config(e.to_string()))?;
        pool.install(|| {
            use rayon::prelude::*;
            train.seeds.par_iter().map(run).collect::<Result<_, _>>()
        })?
    } else {
        train.seeds.iter().map(run).collect::<Result<_, _>>()?
    };
    let accs: Vec<f64> = seeds.iter().map(|s| s.test_accuracy).collect();
    let (mean, std) = mean_std(&accs);
    Ok(RunReport {
        model: model.clone(),
        train: train.clone(),
        parameter_count,
        seeds,
        mean_test_accuracy: mean,
        std_test_accuracy: std,
    })
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// One seed: split, initialize, train, select by validation accuracy.
pub fn train_seed(
    model_cfg: &TigtConfig,
    train: &TrainConfig,
    inputs: &[GraphInput],
    seed: u64,
) -> Result<SeedReport, TrainError> {
    let start = Instant::now();
    let labels: Vec<usize> = inputs.iter().map(|g| g.label).collect();
    let split = stratified_split(&labels, [train.train_fraction, train.val_fraction, train.test_fraction], seed)?;
    if split.train.is_empty() && train.epochs > 0 {
        return Err(TrainError::Split("training split is empty".into()));
    }
    let mut model = Tigt::new(model_cfg.clone(), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x05ee_d0fb_a7c4);
    let mut state = AdamState::new(model.params().values());

    let subset = |idx: &[usize]| idx.iter().map(|&i| inputs[i].clone()).collect::<Vec<_>>();
    let (val, test) = (subset(&split.val), subset(&split.test));

    let mut best_val = accuracy(&model, &val)?;
    let mut test_acc = accuracy(&model, &test)?;
    let mut best_epoch = 0;
    let mut epoch_losses = Vec::with_capacity(train.epochs);
    let mut val_accuracies = Vec::with_capacity(train.epochs);
    let mut order = split.train.clone();

    for epoch in 1..=train.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(train.batch_size) {
            let batch: Vec<GraphInput> = chunk.iter().map(|&i| inputs[i].clone()).collect();
            let targets: Vec<usize> = batch.iter().map(|g| g.label).collect();
            let mut tape = Tape::new();
            let vars = model.params().bind(&mut tape);
            let logits = model.forward(&mut tape, &vars, &batch, Some(&mut rng))?;
            let loss = tape.cross_entropy(logits, &targets)?;
            let loss_value = tape.value(loss).item();
            if !loss_value.is_finite() {
                let worst = tape.value(logits).data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                return Err(TrainError::NonFinite {
                    seed,
                    epoch,
                    detail: format!("batch {chunk:?}, loss {loss_value}, max |logit| {worst}"),
                });
            }
            total += loss_value * chunk.len() as f64;
            tape.backward(loss)?;
            let grads: Vec<Option<Vec<f64>>> = (0..vars.len())
                .map(|i| {
                    if model.params().is_frozen(i) {
                        None
                    } else {
                        tape.grad(vars[i]).map(<[f64]>::to_vec)
                    }
                })
                .collect();
            adam_step(model.params_mut().values_mut(), &grads, &mut state, train.learning_rate, train.weight_decay);
        }
        epoch_losses.push(total / order.len() as f64);

        let val_acc = accuracy(&model, &val)?;
        val_accuracies.push(val_acc);
        if val_acc > best_val {
            best_val = val_acc;
            best_epoch = epoch;
            test_acc = accuracy(&model, &test)?;
        }
    }

    Ok(SeedReport {
        seed,
        epoch_losses,
        val_accuracies,
        best_epoch,
        best_val_accuracy: best_val,
        test_accuracy: test_acc,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Fraction of graphs classified correctly; an empty set scores 0.
pub fn accuracy(model: &Tigt, graphs: &[GraphInput]) -> Result<f64, TrainError> {
    if graphs.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for g in graphs {
        if model.predict(g)? == g.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / graphs.len() as f64)
}
