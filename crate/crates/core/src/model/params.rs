use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tensor::{Tape, Tensor, Var};

use super::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

/// Named parameter tensors. Frozen entries never receive updates.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Tensor>,
    frozen: Vec<bool>,
}

impl ParamStore {
    pub(crate) fn add(&mut self, name: String, value: Tensor) -> ParamId {
        self.names.push(name);
        self.values.push(value);
        self.frozen.push(false);
        ParamId(self.values.len() - 1)
    }

    pub(crate) fn zeros(&mut self, name: String, shape: &[usize]) -> ParamId {
        self.add(name, Tensor::zeros(shape))
    }

    pub(crate) fn ones(&mut self, name: String, shape: &[usize]) -> ParamId {
        self.add(name, Tensor::full(shape, 1.0))
    }

    pub(crate) fn uniform<R: Rng + ?Sized>(&mut self, name: String, shape: &[usize], bound: f64, rng: &mut R) -> ParamId {
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
        self.add(name, Tensor::new(shape, data).expect("shape matches data"))
    }

    /// Glorot-uniform `[fan_in, fan_out]` weight and zero `[fan_out]` bias.
    pub(crate) fn dense<R: Rng + ?Sized>(&mut self, name: &str, fan_in: usize, fan_out: usize, rng: &mut R) -> (ParamId, ParamId) {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let w = self.uniform(format!("{name}.weight"), &[fan_in, fan_out], bound, rng);
        let b = self.zeros(format!("{name}.bias"), &[fan_out]);
        (w, b)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Tensor] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Tensor] {
        &mut self.values
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn is_frozen(&self, index: usize) -> bool {
        self.frozen[index]
    }

    pub fn freeze(&mut self, index: usize) {
        self.frozen[index] = true;
    }

    /// Number of trainable scalars.
    pub fn trainable_scalars(&self) -> usize {
        self.values.iter().zip(&self.frozen).filter(|(_, &f)| !f).map(|(t, _)| t.numel()).sum()
    }

    /// Places every parameter on the tape; trainable ones track gradients.
    pub fn bind(&self, tape: &mut Tape) -> Vec<Var> {
        self.values.iter().zip(&self.frozen).map(|(t, &f)| tape.leaf(t.clone(), !f)).collect()
    }

    pub fn to_checkpoint(&self) -> Vec<NamedTensor> {
        self.names
            .iter()
            .zip(&self.values)
            .map(|(name, t)| NamedTensor { name: name.clone(), shape: t.shape().to_vec(), data: t.data().to_vec() })
            .collect()
    }

    /// Overwrites values from a checkpoint; names and shapes must match.
    pub fn load_checkpoint(&mut self, entries: &[NamedTensor]) -> Result<(), ModelError> {
        if entries.len() != self.values.len() {
            return Err(ModelError::Checkpoint(format!(
                "checkpoint has {} tensors, model has {}",
                entries.len(),
                self.values.len()
            )));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.name != self.names[i] || e.shape != self.values[i].shape() {
                return Err(ModelError::Checkpoint(format!(
                    "entry {i}: expected {} {:?}, found {} {:?}",
                    self.names[i],
                    self.values[i].shape(),
                    e.name,
                    e.shape
                )));
            }
            self.values[i] = Tensor::new(&e.shape, e.data.clone()).map_err(|err| ModelError::Checkpoint(err.to_string()))?;
        }
        Ok(())
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let json = serde_json::to_string(&self.to_checkpoint()).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| ModelError::Checkpoint(e.to_string()))
    }

    pub fn load_json(&mut self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        let entries: Vec<NamedTensor> = serde_json::from_str(&text).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        self.load_checkpoint(&entries)
    }
}

/// Checkpoint record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}
