//! Topology-informed graph transformer.
//!
//! Each layer mixes three node streams: message passing over the adjacency
//! `A`, message passing over the cycle clique adjacency `A_C`, and global
//! multi-head attention. A squeeze-excitation gate built from a graph
//! readout rescales the channels before the feed-forward block.

mod config;
mod params;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Graph, GraphError};
use crate::tensor::{Tape, Tensor, TensorError, Var};
use crate::topology::graph_clique_adjacency;

pub use config::{Activation, NormMode, PathMode, Pooling, TigtConfig};
pub use params::{NamedTensor, ParamId, ParamStore};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("input: {0}")]
    Input(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One graph ready for the network: dense features, `A`, `A_C` and a label.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphInput {
    pub features: Tensor,
    pub adjacency: Tensor,
    pub clique_adjacency: Tensor,
    pub label: usize,
}

impl GraphInput {
    /// Computes `A_C` from the graph's cycle basis. Graphs without features
    /// get a constant 1.0 feature of width `input_dim`.
    pub fn from_graph(g: &Graph, label: usize, input_dim: usize, max_cycle_len: Option<usize>) -> Result<Self, ModelError> {
        let clique = graph_clique_adjacency(g, max_cycle_len).matrix;
        Self::with_clique(g, label, input_dim, clique.to_f64())
    }

    /// Uses a caller-supplied `A_C` (row-major `n × n`).
    pub fn with_clique(g: &Graph, label: usize, input_dim: usize, clique: Vec<f64>) -> Result<Self, ModelError> {
        let n = g.num_nodes();
        let features = match g.node_features() {
            Some(f) if f.dim() == input_dim => Tensor::new(&[n, input_dim], f.data().to_vec())?,
            Some(f) => {
                return Err(ModelError::Input(format!("feature width {} but model expects {input_dim}", f.dim())));
            }
            None => Tensor::full(&[n, input_dim], 1.0),
        };
        Ok(Self {
            features,
            adjacency: Tensor::new(&[n, n], g.adjacency_matrix().to_f64())?,
            clique_adjacency: Tensor::new(&[n, n], clique)?,
            label,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.features.shape()[0]
    }

    /// Relabels node `i` as `perm[i]`, carrying `A_C` along rather than
    /// recomputing it.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, ModelError> {
        let n = self.num_nodes();
        crate::graph::check_permutation(perm, n)?;
        let d = self.features.shape()[1];
        let mut features = vec![0.0; n * d];
        for (i, &p) in perm.iter().enumerate() {
            features[p * d..(p + 1) * d].copy_from_slice(&self.features.data()[i * d..(i + 1) * d]);
        }
        let square = |m: &Tensor| {
            let mut out = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    out[perm[i] * n + perm[j]] = m.data()[i * n + j];
                }
            }
            Tensor::new(&[n, n], out)
        };
        Ok(Self {
            features: Tensor::new(&[n, d], features)?,
            adjacency: square(&self.adjacency)?,
            clique_adjacency: square(&self.clique_adjacency)?,
            label: self.label,
        })
    }
}

#[derive(Clone, Copy, Debug)]
struct Linear {
    weight: ParamId,
    bias: ParamId,
}

#[derive(Clone, Copy, Debug)]
struct Gin {
    eps: ParamId,
    first: Linear,
    second: Linear,
}

#[derive(Clone, Copy, Debug)]
struct Norm {
    gain: ParamId,
    bias: ParamId,
}

#[derive(Clone, Copy, Debug)]
struct Attention {
    query: Linear,
    key: Linear,
    value: Linear,
    output: Linear,
}

#[derive(Clone, Copy, Debug)]
struct GraphGate {
    squeeze: Linear,
    excite: Linear,
}

#[derive(Clone, Debug)]
struct PositionalEmbedding {
    adjacency: Vec<Gin>,
    clique: Vec<Gin>,
    theta: ParamId,
}

#[derive(Clone, Debug)]
struct EncoderLayer {
    gin_adjacency: Gin,
    gin_clique: Option<Gin>,
    attention: Option<Attention>,
    norm_mix: Norm,
    gate: Option<GraphGate>,
    ffn_first: Linear,
    ffn_second: Linear,
    norm_out: Norm,
}

/// Parameters plus the layout that maps them onto the architecture.
#[derive(Clone, Debug)]
pub struct Tigt {
    config: TigtConfig,
    params: ParamStore,
    embed: Linear,
    pe: Option<PositionalEmbedding>,
    layers: Vec<EncoderLayer>,
    head: Linear,
}

struct Builder<'a> {
    store: ParamStore,
    rng: &'a mut ChaCha8Rng,
}

impl Builder<'_> {
    fn linear(&mut self, name: &str, fan_in: usize, fan_out: usize) -> Linear {
        let (weight, bias) = self.store.dense(name, fan_in, fan_out, self.rng);
        Linear { weight, bias }
    }

    fn gin(&mut self, name: &str, k: usize) -> Gin {
        Gin {
            eps: self.store.zeros(format!("{name}.eps"), &[1]),
            first: self.linear(&format!("{name}.mlp0"), k, k),
            second: self.linear(&format!("{name}.mlp1"), k, k),
        }
    }

    fn norm(&mut self, name: &str, k: usize) -> Norm {
        Norm {
            gain: self.store.ones(format!("{name}.gain"), &[k]),
            bias: self.store.zeros(format!("{name}.bias"), &[k]),
        }
    }
}

impl Tigt {
    pub fn new(config: TigtConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let k = config.hidden_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = Builder { store: ParamStore::default(), rng: &mut rng };

        let embed = b.linear("embed", config.input_dim, k);
        let pe = config.use_pe.then(|| {
            let adjacency: Vec<Gin> = (0..config.pe_mpnn_layers).map(|i| b.gin(&format!("pe.gin_a{i}"), k)).collect();
            let clique = if config.pe_share_weights {
                adjacency.clone()
            } else {
                (0..config.pe_mpnn_layers).map(|i| b.gin(&format!("pe.gin_c{i}"), k)).collect()
            };
            let theta = b.store.uniform("pe.theta".into(), &[k, 2], 0.1, b.rng);
            PositionalEmbedding { adjacency, clique, theta }
        });
        let layers = (0..config.num_layers)
            .map(|l| {
                let p = format!("layer{l}");
                let reduced = k / config.reduction_factor;
                EncoderLayer {
                    gin_adjacency: b.gin(&format!("{p}.gin_a"), k),
                    gin_clique: (config.dual_path == PathMode::Dual).then(|| b.gin(&format!("{p}.gin_c"), k)),
                    attention: config.use_global_attention.then(|| Attention {
                        query: b.linear(&format!("{p}.attn.q"), k, k),
                        key: b.linear(&format!("{p}.attn.k"), k, k),
                        value: b.linear(&format!("{p}.attn.v"), k, k),
                        output: b.linear(&format!("{p}.attn.o"), k, k),
                    }),
                    norm_mix: b.norm(&format!("{p}.norm_mix"), k),
                    gate: config.use_graph_info.then(|| GraphGate {
                        squeeze: b.linear(&format!("{p}.gate.squeeze"), k, reduced),
                        excite: b.linear(&format!("{p}.gate.excite"), reduced, k),
                    }),
                    ffn_first: b.linear(&format!("{p}.ffn0"), k, k),
                    ffn_second: b.linear(&format!("{p}.ffn1"), k, k),
                    norm_out: b.norm(&format!("{p}.norm_out"), k),
                }
            })
            .collect();
        let head = b.linear("head", k, config.num_classes);
        Ok(Self { config, params: b.store, embed, pe, layers, head })
    }

    pub fn config(&self) -> &TigtConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// Trainable scalar count.
    pub fn count_parameters(&self) -> usize {
        self.params.trainable_scalars()
    }

    /// Logits `[B, C]` for a batch. `params` comes from [`ParamStore::bind`].
    /// Attention dropout is applied only when `dropout_rng` is given.
    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &[Var],
        batch: &[GraphInput],
        mut dropout_rng: Option<&mut dyn RngCore>,
    ) -> Result<Var, ModelError> {
        if batch.is_empty() {
            return Err(ModelError::Input("empty batch".into()));
        }
        let mut rows = Vec::with_capacity(batch.len());
        for g in batch {
            let rng = dropout_rng.as_mut().map(|r| &mut **r as &mut dyn RngCore);
            rows.push(self.forward_graph(tape, params, g, rng)?);
        }
        Ok(tape.concat(&rows, 0)?)
    }

    /// Inference-only logits for one graph.
    pub fn logits(&self, graph: &GraphInput) -> Result<Vec<f64>, ModelError> {
        let mut tape = Tape::new();
        let params: Vec<Var> = self.params.values().iter().map(|t| tape.constant(t.clone())).collect();
        let out = self.forward_graph(&mut tape, &params, graph, None)?;
        Ok(tape.value(out).data().to_vec())
    }

    pub fn predict(&self, graph: &GraphInput) -> Result<usize, ModelError> {
        let logits = self.logits(graph)?;
        Ok(argmax(&logits))
    }

    /// Node representations after the embedding, after the positional
    /// embedding and after every encoder layer, plus the logits.
    pub fn trace(&self, graph: &GraphInput) -> Result<ForwardTrace, ModelError> {
        let mut tape = Tape::new();
        let params: Vec<Var> = self.params.values().iter().map(|t| tape.constant(t.clone())).collect();
        let mut stages = Vec::new();
        let out = self.run_graph(&mut tape, &params, graph, None, Some(&mut stages))?;
        let mut stages: Vec<Tensor> = stages.into_iter().map(|v| tape.value(v).clone()).collect();
        let layers = stages.split_off(2);
        let positional = stages.pop().expect("positional stage");
        let embedded = stages.pop().expect("embedding stage");
        Ok(ForwardTrace { embedded, positional, layers, logits: tape.value(out).data().to_vec() })
    }

    fn forward_graph(
        &self,
        tape: &mut Tape,
        p: &[Var],
        g: &GraphInput,
        dropout_rng: Option<&mut dyn RngCore>,
    ) -> Result<Var, ModelError> {
        self.run_graph(tape, p, g, dropout_rng, None)
    }

    fn run_graph(
        &self,
        tape: &mut Tape,
        p: &[Var],
        g: &GraphInput,
        mut dropout_rng: Option<&mut dyn RngCore>,
        mut stages: Option<&mut Vec<Var>>,
    ) -> Result<Var, ModelError> {
        let n = g.num_nodes();
        if n == 0 {
            return Err(ModelError::Input("graph has no nodes".into()));
        }
        if g.features.shape() != [n, self.config.input_dim] {
            return Err(ModelError::Input(format!(
                "features have shape {:?}, expected [{n}, {}]",
                g.features.shape(),
                self.config.input_dim
            )));
        }
        let x = tape.constant(g.features.clone());
        let a = tape.constant(g.adjacency.clone());
        let ac = tape.constant(g.clique_adjacency.clone());

        if g.adjacency.shape() != [n, n] || g.clique_adjacency.shape() != [n, n] {
            return Err(ModelError::Input(format!("adjacency matrices must be {n}x{n}")));
        }
        let mut record = |h: Var| {
            if let Some(s) = stages.as_mut() {
                s.push(h);
            }
        };
        let mut h = linear(tape, p, self.embed, x)?;
        record(h);
        if let Some(pe) = &self.pe {
            h = self.positional_embedding(tape, p, pe, h, a, ac)?;
        }
        record(h);
        for layer in &self.layers {
            let rng = dropout_rng.as_mut().map(|r| &mut **r as &mut dyn RngCore);
            h = self.encoder_layer(tape, p, layer, h, a, ac, rng)?;
            record(h);
        }
        let pooled = pool(tape, h, self.config.graph_pool)?;
        let pooled = tape.reshape(pooled, &[1, self.config.hidden_dim])?;
        linear(tape, p, self.head, pooled)
    }

    fn positional_embedding(
        &self,
        tape: &mut Tape,
        p: &[Var],
        pe: &PositionalEmbedding,
        x: Var,
        a: Var,
        ac: Var,
    ) -> Result<Var, ModelError> {
        let (n, k) = (tape.shape(x)[0], self.config.hidden_dim);
        let run = |tape: &mut Tape, stack: &[Gin], adj: Var| -> Result<Var, ModelError> {
            let mut h = x;
            for (i, gin) in stack.iter().enumerate() {
                h = gin_layer(tape, p, *gin, h, adj)?;
                if i + 1 < stack.len() {
                    h = tape.relu(h);
                }
            }
            Ok(tape.reshape(h, &[n, k, 1])?)
        };
        let ha = run(tape, &pe.adjacency, a)?;
        let hc = run(tape, &pe.clique, ac)?;
        let stacked = tape.concat(&[ha, hc], 2)?;
        let weighted = tape.mul(stacked, p[pe.theta.0])?;
        let activated = match self.config.pe_activation {
            Activation::Tanh => tape.tanh(weighted),
            Activation::Relu => tape.relu(weighted),
        };
        let summed = tape.sum(activated, 2)?;
        Ok(tape.add(x, summed)?)
    }

    #[allow(clippy::too_many_arguments)]
    fn encoder_layer(
        &self,
        tape: &mut Tape,
        p: &[Var],
        layer: &EncoderLayer,
        x: Var,
        a: Var,
        ac: Var,
        dropout_rng: Option<&mut dyn RngCore>,
    ) -> Result<Var, ModelError> {
        let ha = gin_layer(tape, p, layer.gin_adjacency, x, a)?;
        let mut mixed = tape.add(x, ha)?;
        if let Some(gin) = layer.gin_clique {
            let hc = gin_layer(tape, p, gin, x, ac)?;
            mixed = tape.add(mixed, hc)?;
        }
        if let Some(attn) = layer.attention {
            let ha = self.attention(tape, p, attn, x, dropout_rng)?;
            mixed = tape.add(mixed, ha)?;
        }
        let mut h = self.norm(tape, p, layer.norm_mix, mixed)?;

        if let Some(gate) = layer.gate {
            let k = self.config.hidden_dim;
            let y0 = pool(tape, h, self.config.readout)?;
            let y0 = tape.reshape(y0, &[1, k])?;
            let y1 = linear(tape, p, gate.squeeze, y0)?;
            let y1 = tape.relu(y1);
            let y2 = linear(tape, p, gate.excite, y1)?;
            let y2 = tape.sigmoid(y2);
            let y2 = tape.reshape(y2, &[k])?;
            h = tape.mul(h, y2)?;
        }

        let f = linear(tape, p, layer.ffn_first, h)?;
        let f = tape.relu(f);
        let f = linear(tape, p, layer.ffn_second, f)?;
        let out = tape.add(h, f)?;
        self.norm(tape, p, layer.norm_out, out)
    }

    fn attention(
        &self,
        tape: &mut Tape,
        p: &[Var],
        attn: Attention,
        x: Var,
        mut dropout_rng: Option<&mut dyn RngCore>,
    ) -> Result<Var, ModelError> {
        let heads = self.config.num_heads;
        let dh = self.config.hidden_dim / heads;
        let q = linear(tape, p, attn.query, x)?;
        let k = linear(tape, p, attn.key, x)?;
        let v = linear(tape, p, attn.value, x)?;
        let scale = 1.0 / (dh as f64).sqrt();
        let mut outs = Vec::with_capacity(heads);
        for h in 0..heads {
            let qh = tape.narrow(q, 1, h * dh, dh)?;
            let kh = tape.narrow(k, 1, h * dh, dh)?;
            let vh = tape.narrow(v, 1, h * dh, dh)?;
            let kt = tape.transpose(kh)?;
            let scores = tape.matmul(qh, kt)?;
            let scores = tape.scale(scores, scale);
            let mut weights = tape.softmax(scores)?;
            if let (Some(rng), rate) = (dropout_rng.as_mut(), self.config.attention_dropout) {
                if rate > 0.0 {
                    let shape = tape.shape(weights).to_vec();
                    let keep = 1.0 / (1.0 - rate);
                    let mask: Vec<f64> =
                        (0..shape.iter().product()).map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep }).collect();
                    let mask = tape.constant(Tensor::new(&shape, mask)?);
                    weights = tape.mul(weights, mask)?;
                }
            }
            outs.push(tape.matmul(weights, vh)?);
        }
        let joined = tape.concat(&outs, 1)?;
        linear(tape, p, attn.output, joined)
    }

    fn norm(&self, tape: &mut Tape, p: &[Var], norm: Norm, x: Var) -> Result<Var, ModelError> {
        match self.config.norm {
            NormMode::Row => Ok(tape.feature_norm(x, p[norm.gain.0], p[norm.bias.0])?),
            NormMode::Batch => {
                let n = tape.shape(x)[0];
                let ones = tape.constant(Tensor::full(&[n], 1.0));
                let zeros = tape.constant(Tensor::zeros(&[n]));
                let xt = tape.transpose(x)?;
                let normed = tape.feature_norm(xt, ones, zeros)?;
                let normed = tape.transpose(normed)?;
                let scaled = tape.mul(normed, p[norm.gain.0])?;
                Ok(tape.add(scaled, p[norm.bias.0])?)
            }
        }
    }
}

/// Intermediate node representations of one graph.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub embedded: Tensor,
    /// Equal to `embedded` when the positional embedding is off.
    pub positional: Tensor,
    pub layers: Vec<Tensor>,
    pub logits: Vec<f64>,
}

fn linear(tape: &mut Tape, p: &[Var], lin: Linear, x: Var) -> Result<Var, ModelError> {
    let y = tape.matmul(x, p[lin.weight.0])?;
    Ok(tape.add(y, p[lin.bias.0])?)
}

fn gin_layer(tape: &mut Tape, p: &[Var], layer: Gin, h: Var, adj: Var) -> Result<Var, ModelError> {
    let first = GinWeights { weight: p[layer.first.weight.0], bias: p[layer.first.bias.0] };
    let second = GinWeights { weight: p[layer.second.weight.0], bias: p[layer.second.bias.0] };
    gin(tape, h, adj, p[layer.eps.0], first, second)
}

/// One affine map of the GIN MLP.
#[derive(Clone, Copy, Debug)]
pub struct GinWeights {
    pub weight: Var,
    pub bias: Var,
}

/// `MLP((1 + ε)·h + adj·h)` with a two-layer ReLU MLP. A node with an
/// empty adjacency row aggregates the zero vector.
pub fn gin(tape: &mut Tape, h: Var, adj: Var, eps: Var, first: GinWeights, second: GinWeights) -> Result<Var, ModelError> {
    let agg = tape.matmul(adj, h)?;
    let eps_h = tape.mul(h, eps)?;
    let z = tape.add(h, eps_h)?;
    let z = tape.add(z, agg)?;
    let z = tape.matmul(z, first.weight)?;
    let z = tape.add(z, first.bias)?;
    let z = tape.relu(z);
    let z = tape.matmul(z, second.weight)?;
    Ok(tape.add(z, second.bias)?)
}

fn pool(tape: &mut Tape, h: Var, mode: Pooling) -> Result<Var, TensorError> {
    match mode {
        Pooling::Sum => tape.sum(h, 0),
        Pooling::Mean => tape.mean(h, 0),
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
