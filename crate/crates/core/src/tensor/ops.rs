use super::{Op, Tape, Tensor, TensorError, Var, NORM_EPS};

/// Splits `shape` around `axis` into (outer, dim, inner) extents.
pub(super) fn axis_extents(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

fn broadcastable(a: &[usize], b: &[usize]) -> bool {
    a == b
        || b.iter().product::<usize>() == 1
        || (b.len() < a.len() && a[a.len() - b.len()..] == *b)
}

impl Tape {
    fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|&v| self.nodes[v.0].requires_grad)
    }

    fn binary(
        &mut self,
        op_name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var, TensorError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if !broadcastable(&ta.shape, &tb.shape) {
            return Err(TensorError::Shape { op: op_name, left: ta.shape.clone(), right: tb.shape.clone() });
        }
        let bl = tb.data.len();
        let data = if bl == ta.data.len() {
            ta.data.iter().zip(&tb.data).map(|(&x, &y)| f(x, y)).collect()
        } else {
            ta.data.iter().enumerate().map(|(i, &x)| f(x, tb.data[i % bl])).collect()
        };
        let value = Tensor { shape: ta.shape.clone(), data };
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, rg, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let t = self.value(x);
        let value = Tensor { shape: t.shape.clone(), data: t.data.iter().map(|v| v * c).collect() };
        let rg = self.any_grad(&[x]);
        self.push(value, rg, Op::Scale(x, c))
    }

    fn unary(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let t = self.value(x);
        let value = Tensor { shape: t.shape.clone(), data: t.data.iter().map(|&v| f(v)).collect() };
        let rg = self.any_grad(&[x]);
        self.push(value, rg, op)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, f64::tanh, Op::Tanh(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, |v| v.max(0.0), Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, |v| 1.0 / (1.0 + (-v).exp()), Op::Sigmoid(x))
    }

    /// Softmax over the last dimension.
    pub fn softmax(&mut self, x: Var) -> Result<Var, TensorError> {
        let t = self.value(x);
        let d = *t.shape.last().ok_or(TensorError::Invalid { op: "softmax", message: "scalar input".into() })?;
        let mut data = t.data.clone();
        if d > 0 {
            for row in data.chunks_mut(d) {
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for v in row.iter_mut() {
                    *v = (*v - max).exp();
                    total += *v;
                }
                for v in row.iter_mut() {
                    *v /= total;
                }
            }
        }
        let value = Tensor { shape: t.shape.clone(), data };
        let rg = self.any_grad(&[x]);
        Ok(self.push(value, rg, Op::Softmax(x)))
    }

    /// `[m, k] · [k, n] → [m, n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape.len() != 2 || tb.shape.len() != 2 || ta.shape[1] != tb.shape[0] {
            return Err(TensorError::Shape { op: "matmul", left: ta.shape.clone(), right: tb.shape.clone() });
        }
        let (m, k, n) = (ta.shape[0], ta.shape[1], tb.shape[1]);
        let mut data = vec![0.0; m * n];
        gemm(m, k, n, &ta.data, (k, 1), &tb.data, (n, 1), &mut data, 0.0);
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(Tensor { shape: vec![m, n], data }, rg, Op::MatMul(a, b)))
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var, TensorError> {
        let t = self.value(x);
        if t.shape.len() != 2 {
            return Err(TensorError::Invalid { op: "transpose", message: format!("needs 2-d input, got {:?}", t.shape) });
        }
        let (r, c) = (t.shape[0], t.shape[1]);
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = t.data[i * c + j];
            }
        }
        let rg = self.any_grad(&[x]);
        Ok(self.push(Tensor { shape: vec![c, r], data }, rg, Op::Transpose(x)))
    }

    fn reduce(&mut self, x: Var, axis: usize, mean: bool) -> Result<Var, TensorError> {
        let t = self.value(x);
        if axis >= t.shape.len() {
            return Err(TensorError::Invalid {
                op: if mean { "mean" } else { "sum" },
                message: format!("axis {axis} out of range for {:?}", t.shape),
            });
        }
        let (outer, dim, inner) = axis_extents(&t.shape, axis);
        let mut data = vec![0.0; outer * inner];
        for o in 0..outer {
            for a in 0..dim {
                let src = &t.data[(o * dim + a) * inner..(o * dim + a + 1) * inner];
                for (d, s) in data[o * inner..(o + 1) * inner].iter_mut().zip(src) {
                    *d += s;
                }
            }
        }
        if mean && dim > 0 {
            let inv = 1.0 / dim as f64;
            data.iter_mut().for_each(|v| *v *= inv);
        }
        let mut shape = t.shape.clone();
        shape.remove(axis);
        let rg = self.any_grad(&[x]);
        let op = if mean { Op::Mean { x, axis } } else { Op::Sum { x, axis } };
        Ok(self.push(Tensor { shape, data }, rg, op))
    }

    pub fn sum(&mut self, x: Var, axis: usize) -> Result<Var, TensorError> {
        self.reduce(x, axis, false)
    }

    pub fn mean(&mut self, x: Var, axis: usize) -> Result<Var, TensorError> {
        self.reduce(x, axis, true)
    }

    /// Sum of every element, as a scalar.
    pub fn sum_all(&mut self, x: Var) -> Result<Var, TensorError> {
        let n = self.value(x).numel();
        let flat = self.reshape(x, &[n])?;
        self.sum(flat, 0)
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var, TensorError> {
        let first = parts
            .first()
            .ok_or(TensorError::Invalid { op: "concat", message: "no inputs".into() })?;
        let base = self.value(*first).shape.clone();
        if axis >= base.len() {
            return Err(TensorError::Invalid { op: "concat", message: format!("axis {axis} out of range for {base:?}") });
        }
        let mut total = 0;
        for &p in parts {
            let s = &self.value(p).shape;
            let compatible = s.len() == base.len() && s.iter().zip(&base).enumerate().all(|(i, (x, y))| i == axis || x == y);
            if !compatible {
                return Err(TensorError::Shape { op: "concat", left: base.clone(), right: s.clone() });
            }
            total += s[axis];
        }
        let (outer, _, inner) = axis_extents(&base, axis);
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &p in parts {
                let t = self.value(p);
                let chunk = t.shape[axis] * inner;
                data.extend_from_slice(&t.data[o * chunk..(o + 1) * chunk]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        let rg = self.any_grad(parts);
        Ok(self.push(Tensor { shape, data }, rg, Op::Concat { parts: parts.to_vec(), axis }))
    }

    /// Slice `len` entries starting at `start` along `axis`.
    pub fn narrow(&mut self, x: Var, axis: usize, start: usize, len: usize) -> Result<Var, TensorError> {
        let t = self.value(x);
        if axis >= t.shape.len() || start + len > t.shape[axis] {
            return Err(TensorError::Invalid {
                op: "narrow",
                message: format!("range {start}..{} on axis {axis} of {:?}", start + len, t.shape),
            });
        }
        let (outer, dim, inner) = axis_extents(&t.shape, axis);
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let from = (o * dim + start) * inner;
            data.extend_from_slice(&t.data[from..from + len * inner]);
        }
        let mut shape = t.shape.clone();
        shape[axis] = len;
        let rg = self.any_grad(&[x]);
        Ok(self.push(Tensor { shape, data }, rg, Op::Narrow { x, axis, start }))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var, TensorError> {
        let t = self.value(x);
        if shape.iter().product::<usize>() != t.numel() {
            return Err(TensorError::Shape { op: "reshape", left: t.shape.clone(), right: shape.to_vec() });
        }
        let value = Tensor { shape: shape.to_vec(), data: t.data.clone() };
        let rg = self.any_grad(&[x]);
        Ok(self.push(value, rg, Op::Reshape(x)))
    }

    /// Rows of a `[vocab, dim]` table, one per index.
    pub fn embedding_lookup(&mut self, table: Var, indices: &[usize]) -> Result<Var, TensorError> {
        let t = self.value(table);
        if t.shape.len() != 2 {
            return Err(TensorError::Invalid { op: "embedding_lookup", message: format!("table shape {:?}", t.shape) });
        }
        let (vocab, dim) = (t.shape[0], t.shape[1]);
        let mut data = Vec::with_capacity(indices.len() * dim);
        for &i in indices {
            if i >= vocab {
                return Err(TensorError::Invalid { op: "embedding_lookup", message: format!("index {i} >= vocab {vocab}") });
            }
            data.extend_from_slice(&t.data[i * dim..(i + 1) * dim]);
        }
        let rg = self.any_grad(&[table]);
        Ok(self.push(
            Tensor { shape: vec![indices.len(), dim], data },
            rg,
            Op::Embedding { table, indices: indices.to_vec() },
        ))
    }

    /// Standardizes each row of `x: [n, k]` to zero mean and unit variance,
    /// then applies `gain ⊙ · + bias` (both `[k]`).
    pub fn feature_norm(&mut self, x: Var, gain: Var, bias: Var) -> Result<Var, TensorError> {
        let t = self.value(x);
        if t.shape.len() != 2 {
            return Err(TensorError::Invalid { op: "feature_norm", message: format!("needs [n, k], got {:?}", t.shape) });
        }
        let k = t.shape[1];
        if k == 0 {
            return Err(TensorError::Invalid { op: "feature_norm", message: "zero feature width".into() });
        }
        let (g, b) = (self.value(gain), self.value(bias));
        if g.shape != [k] || b.shape != [k] {
            return Err(TensorError::Shape { op: "feature_norm", left: t.shape.clone(), right: g.shape.clone() });
        }
        let rows = t.shape[0];
        let mut normalized = vec![0.0; rows * k];
        let mut inv_std = vec![0.0; rows];
        let mut data = vec![0.0; rows * k];
        for r in 0..rows {
            let row = &t.data[r * k..(r + 1) * k];
            let mean = row.iter().sum::<f64>() / k as f64;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k as f64;
            let s = 1.0 / (var + NORM_EPS).sqrt();
            inv_std[r] = s;
            for c in 0..k {
                let xh = (row[c] - mean) * s;
                normalized[r * k + c] = xh;
                data[r * k + c] = xh * g.data[c] + b.data[c];
            }
        }
        let value = Tensor { shape: t.shape.clone(), data };
        let rg = self.any_grad(&[x, gain, bias]);
        Ok(self.push(value, rg, Op::FeatureNorm { x, gain, bias, normalized, inv_std }))
    }

    /// Mean cross-entropy of `logits: [batch, classes]` against class indices.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var, TensorError> {
        let t = self.value(logits);
        if t.shape.len() != 2 || t.shape[0] != targets.len() || t.shape[0] == 0 {
            return Err(TensorError::Shape { op: "cross_entropy", left: t.shape.clone(), right: vec![targets.len()] });
        }
        let (batch, classes) = (t.shape[0], t.shape[1]);
        let mut probs = vec![0.0; batch * classes];
        let mut loss = 0.0;
        for (r, &y) in targets.iter().enumerate() {
            if y >= classes {
                return Err(TensorError::Invalid { op: "cross_entropy", message: format!("target {y} >= {classes} classes") });
            }
            let row = &t.data[r * classes..(r + 1) * classes];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            for c in 0..classes {
                probs[r * classes + c] = (row[c] - lse).exp();
            }
            loss += lse - row[y];
        }
        let value = Tensor::scalar(loss / batch as f64);
        let rg = self.any_grad(&[logits]);
        Ok(self.push(value, rg, Op::CrossEntropy { logits, targets: targets.to_vec(), probs }))
    }
}

/// `c = a·b + beta·c` on strided row-major views.
#[allow(clippy::too_many_arguments)]
pub(super) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    c: &mut [f64],
    beta: f64,
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(c.len() >= m * n);
    // SAFETY: the strides describe in-bounds views of `a` (m×k), `b` (k×n)
    // and `c` (m×n, row-major), which the asserts and callers guarantee.
    assert!(k == 0 || ((m - 1) * rsa + (k - 1) * csa < a.len() && (k - 1) * rsb + (n - 1) * csb < b.len()));
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
