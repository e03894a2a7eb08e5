use super::ops::{axis_extents, gemm};
use super::{Op, Tape, TensorError, Var};

struct Grads {
    slots: Vec<Option<Vec<f64>>>,
}

impl Grads {
    fn slot(&mut self, tape: &Tape, v: Var) -> Option<&mut Vec<f64>> {
        let node = &tape.nodes[v.0];
        if !node.requires_grad {
            return None;
        }
        let len = node.value.numel();
        Some(self.slots[v.0].get_or_insert_with(|| vec![0.0; len]))
    }
}

impl Tape {
    /// Accumulates `∂loss/∂leaf` into every leaf that requires a gradient.
    pub fn backward(&mut self, loss: Var) -> Result<(), TensorError> {
        let loss_node = &self.nodes[loss.0];
        if loss_node.value.numel() != 1 {
            return Err(TensorError::NonScalarLoss(loss_node.value.shape.clone()));
        }
        if self.has_grads {
            return Err(TensorError::GradAccumulation);
        }
        let mut grads = Grads { slots: vec![None; self.nodes.len()] };
        if loss_node.requires_grad {
            grads.slots[loss.0] = Some(vec![1.0]);
        }

        let mut leaf_grads = Vec::new();
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads.slots[idx].take() else { continue };
            let node = &self.nodes[idx];
            if matches!(node.op, Op::Leaf) {
                leaf_grads.push((idx, g));
                continue;
            }
            self.propagate(idx, &g, &mut grads);
        }

        for n in self.nodes.iter_mut().filter(|n| n.requires_grad && matches!(n.op, Op::Leaf)) {
            n.grad = Some(vec![0.0; n.value.numel()]);
        }
        for (idx, g) in leaf_grads {
            self.nodes[idx].grad = Some(g);
        }
        self.has_grads = true;
        Ok(())
    }

    fn propagate(&self, idx: usize, g: &[f64], grads: &mut Grads) {
        let node = &self.nodes[idx];
        let out = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) | Op::Sub(a, b) => {
                let sign = if matches!(node.op, Op::Sub(..)) { -1.0 } else { 1.0 };
                if let Some(ga) = grads.slot(self, *a) {
                    ga.iter_mut().zip(g).for_each(|(d, s)| *d += s);
                }
                if let Some(gb) = grads.slot(self, *b) {
                    let bl = gb.len();
                    for (i, s) in g.iter().enumerate() {
                        gb[i % bl] += sign * s;
                    }
                }
            }
            Op::Mul(a, b) => {
                let (va, vb) = (&self.nodes[a.0].value.data, &self.nodes[b.0].value.data);
                let bl = vb.len();
                if let Some(ga) = grads.slot(self, *a) {
                    for (i, s) in g.iter().enumerate() {
                        ga[i] += s * vb[i % bl];
                    }
                }
                if let Some(gb) = grads.slot(self, *b) {
                    for (i, s) in g.iter().enumerate() {
                        gb[i % bl] += s * va[i];
                    }
                }
            }
            Op::Scale(x, c) => {
                if let Some(gx) = grads.slot(self, *x) {
                    gx.iter_mut().zip(g).for_each(|(d, s)| *d += c * s);
                }
            }
            Op::Tanh(x) => {
                if let Some(gx) = grads.slot(self, *x) {
                    for ((d, s), y) in gx.iter_mut().zip(g).zip(&out.data) {
                        *d += s * (1.0 - y * y);
                    }
                }
            }
            Op::Relu(x) => {
                if let Some(gx) = grads.slot(self, *x) {
                    for ((d, s), y) in gx.iter_mut().zip(g).zip(&out.data) {
                        if *y > 0.0 {
                            *d += s;
                        }
                    }
                }
            }
            Op::Sigmoid(x) => {
                if let Some(gx) = grads.slot(self, *x) {
                    for ((d, s), y) in gx.iter_mut().zip(g).zip(&out.data) {
                        *d += s * y * (1.0 - y);
                    }
                }
            }
            Op::Softmax(x) => {
                let d = *out.shape.last().expect("softmax output has a last axis");
                if let Some(gx) = grads.slot(self, *x) {
                    if d > 0 {
                        for ((dx, gy), y) in gx.chunks_mut(d).zip(g.chunks(d)).zip(out.data.chunks(d)) {
                            let dot: f64 = gy.iter().zip(y).map(|(a, b)| a * b).sum();
                            for c in 0..d {
                                dx[c] += y[c] * (gy[c] - dot);
                            }
                        }
                    }
                }
            }
            Op::MatMul(a, b) => {
                let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                let (m, k, n) = (ta.shape[0], ta.shape[1], tb.shape[1]);
                if let Some(ga) = grads.slot(self, *a) {
                    // dA = dC · Bᵀ
                    gemm(m, n, k, g, (n, 1), &tb.data, (1, n), ga, 1.0);
                }
                if let Some(gb) = grads.slot(self, *b) {
                    // dB = Aᵀ · dC
                    gemm(k, m, n, &ta.data, (1, k), g, (n, 1), gb, 1.0);
                }
            }
            Op::Transpose(x) => {
                let (c, r) = (out.shape[0], out.shape[1]);
                if let Some(gx) = grads.slot(self, *x) {
                    for i in 0..r {
                        for j in 0..c {
                            gx[i * c + j] += g[j * r + i];
                        }
                    }
                }
            }
            Op::Sum { x, axis } | Op::Mean { x, axis } => {
                let shape = &self.nodes[x.0].value.shape;
                let (outer, dim, inner) = axis_extents(shape, *axis);
                let scale = if matches!(node.op, Op::Mean { .. }) && dim > 0 { 1.0 / dim as f64 } else { 1.0 };
                if let Some(gx) = grads.slot(self, *x) {
                    for o in 0..outer {
                        let src = &g[o * inner..(o + 1) * inner];
                        for a in 0..dim {
                            let dst = &mut gx[(o * dim + a) * inner..(o * dim + a + 1) * inner];
                            dst.iter_mut().zip(src).for_each(|(d, s)| *d += scale * s);
                        }
                    }
                }
            }
            Op::Concat { parts, axis } => {
                let (outer, total, inner) = axis_extents(&out.shape, *axis);
                let mut offset = 0;
                for &p in parts {
                    let len = self.nodes[p.0].value.shape[*axis];
                    if let Some(gp) = grads.slot(self, p) {
                        for o in 0..outer {
                            let src = &g[(o * total + offset) * inner..(o * total + offset + len) * inner];
                            let dst = &mut gp[o * len * inner..(o + 1) * len * inner];
                            dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
                        }
                    }
                    offset += len;
                }
            }
            Op::Narrow { x, axis, start } => {
                let (outer, dim, inner) = axis_extents(&self.nodes[x.0].value.shape, *axis);
                let len = out.shape[*axis];
                if let Some(gx) = grads.slot(self, *x) {
                    for o in 0..outer {
                        let from = (o * dim + start) * inner;
                        let dst = &mut gx[from..from + len * inner];
                        let src = &g[o * len * inner..(o + 1) * len * inner];
                        dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
                    }
                }
            }
            Op::Reshape(x) => {
                if let Some(gx) = grads.slot(self, *x) {
                    gx.iter_mut().zip(g).for_each(|(d, s)| *d += s);
                }
            }
            Op::Embedding { table, indices } => {
                let dim = out.shape[1];
                if let Some(gt) = grads.slot(self, *table) {
                    for (r, &i) in indices.iter().enumerate() {
                        let dst = &mut gt[i * dim..(i + 1) * dim];
                        dst.iter_mut().zip(&g[r * dim..(r + 1) * dim]).for_each(|(d, s)| *d += s);
                    }
                }
            }
            Op::FeatureNorm { x, gain, bias, normalized, inv_std } => {
                let k = out.shape[1];
                let gain_v = &self.nodes[gain.0].value.data;
                if let Some(gx) = grads.slot(self, *x) {
                    for (r, &s) in inv_std.iter().enumerate() {
                        let xh = &normalized[r * k..(r + 1) * k];
                        let gy = &g[r * k..(r + 1) * k];
                        let dxh: Vec<f64> = gy.iter().zip(gain_v).map(|(a, b)| a * b).collect();
                        let mean_d = dxh.iter().sum::<f64>() / k as f64;
                        let mean_dx = dxh.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / k as f64;
                        for c in 0..k {
                            gx[r * k + c] += s * (dxh[c] - mean_d - xh[c] * mean_dx);
                        }
                    }
                }
                if let Some(gg) = grads.slot(self, *gain) {
                    for (i, s) in g.iter().enumerate() {
                        gg[i % k] += s * normalized[i];
                    }
                }
                if let Some(gb) = grads.slot(self, *bias) {
                    for (i, s) in g.iter().enumerate() {
                        gb[i % k] += s;
                    }
                }
            }
            Op::CrossEntropy { logits, targets, probs } => {
                let batch = targets.len();
                let classes = probs.len() / batch;
                let scale = g[0] / batch as f64;
                if let Some(gl) = grads.slot(self, *logits) {
                    for (r, &y) in targets.iter().enumerate() {
                        for c in 0..classes {
                            let onehot = if c == y { 1.0 } else { 0.0 };
                            gl[r * classes + c] += scale * (probs[r * classes + c] - onehot);
                        }
                    }
                }
            }
        }
    }
}
