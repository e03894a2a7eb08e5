use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TrainError;

/// Indices into the dataset, sorted within each part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class shuffled split with `round(count · fraction)` items for train
/// and validation and the remainder for test. Every part with a positive
/// fraction must receive at least one item of every class.
pub fn stratified_split(labels: &[usize], fractions: [f64; 3], seed: u64) -> Result<Split, TrainError> {
    if fractions.iter().any(|f| *f < 0.0) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(TrainError::Split(format!("fractions {fractions:?} must be non-negative and sum to 1")));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split { train: Vec::new(), val: Vec::new(), test: Vec::new() };
    for (class, mut idx) in by_class {
        idx.shuffle(&mut rng);
        let count = idx.len();
        let n_train = ((count as f64 * fractions[0]).round() as usize).min(count);
        let n_val = ((count as f64 * fractions[1]).round() as usize).min(count - n_train);
        let sizes = [n_train, n_val, count - n_train - n_val];
        if let Some(part) = (0..3).find(|&p| fractions[p] > 0.0 && sizes[p] == 0) {
            return Err(TrainError::Split(format!(
                "class {class} has {count} samples, too few to populate split part {part}"
            )));
        }
        split.train.extend_from_slice(&idx[..n_train]);
        split.val.extend_from_slice(&idx[n_train..n_train + n_val]);
        split.test.extend_from_slice(&idx[n_train + n_val..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
