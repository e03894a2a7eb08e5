use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathMode {
    /// Message passing over both `A` and the clique adjacency.
    Dual,
    /// Message passing over `A` only.
    Single,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    Sum,
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    /// Standardize each node's feature vector.
    Row,
    /// Standardize each channel over the nodes of the graph.
    Batch,
}

/// Every architectural switch of the network, including the ablation axes.
/// Defaults are the CSL settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TigtConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub use_pe: bool,
    pub pe_mpnn_layers: usize,
    pub pe_share_weights: bool,
    pub pe_activation: Activation,
    pub dual_path: PathMode,
    pub use_global_attention: bool,
    pub use_graph_info: bool,
    pub reduction_factor: usize,
    pub readout: Pooling,
    pub graph_pool: Pooling,
    pub attention_dropout: f64,
    pub num_classes: usize,
    pub norm: NormMode,
    /// Only basis cycles up to this many nodes feed the clique adjacency.
    pub max_cycle_len: Option<usize>,
}

impl Default for TigtConfig {
    fn default() -> Self {
        Self {
            input_dim: 1,
            hidden_dim: 64,
            num_layers: 2,
            num_heads: 4,
            use_pe: true,
            pe_mpnn_layers: 1,
            pe_share_weights: true,
            pe_activation: Activation::Tanh,
            dual_path: PathMode::Dual,
            use_global_attention: true,
            use_graph_info: true,
            reduction_factor: 4,
            readout: Pooling::Sum,
            graph_pool: Pooling::Sum,
            attention_dropout: 0.0,
            num_classes: 10,
            norm: NormMode::Row,
            max_cycle_len: None,
        }
    }
}

impl TigtConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |m: String| Err(ModelError::Config(m));
        if self.num_layers == 0 {
            return fail("num_layers must be at least 1".into());
        }
        if self.hidden_dim == 0 || self.num_heads == 0 || !self.hidden_dim.is_multiple_of(self.num_heads) {
            return fail(format!("hidden_dim {} not divisible by num_heads {}", self.hidden_dim, self.num_heads));
        }
        if self.reduction_factor == 0 || !self.hidden_dim.is_multiple_of(self.reduction_factor) {
            return fail(format!(
                "hidden_dim {} not divisible by reduction_factor {}",
                self.hidden_dim, self.reduction_factor
            ));
        }
        if self.input_dim == 0 || self.num_classes == 0 {
            return fail("input_dim and num_classes must be positive".into());
        }
        if self.use_pe && self.pe_mpnn_layers == 0 {
            return fail("pe_mpnn_layers must be at least 1 when the positional embedding is on".into());
        }
        if !(0.0..1.0).contains(&self.attention_dropout) {
            return fail(format!("attention_dropout {} outside [0, 1)", self.attention_dropout));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        TigtConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_divisibility() {
        let bad = [
            TigtConfig { num_heads: 5, ..Default::default() },
            TigtConfig { reduction_factor: 3, ..Default::default() },
            TigtConfig { num_layers: 0, ..Default::default() },
            TigtConfig { attention_dropout: 1.0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
