//! Random-walk positional encodings and their convergence to the
//! stationary distribution.

use crate::graph::Graph;

use super::ExpressivenessError;

/// Dense row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SquareMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let out = &mut data[i * n..(i + 1) * n];
                for (o, b) in out.iter_mut().zip(&other.data[k * n..(k + 1) * n]) {
                    *o += a * b;
                }
            }
        }
        Self { n, data }
    }
}

/// Random-walk transition matrix `M = D⁻¹A`.
pub fn transition_matrix(g: &Graph) -> Result<SquareMatrix, ExpressivenessError> {
    let n = g.num_nodes();
    let mut data = vec![0.0; n * n];
    for v in 0..n {
        let d = g.degree(v);
        if d == 0 {
            return Err(ExpressivenessError::DegreeZero(v));
        }
        for &u in g.neighbors(v) {
            data[v * n + u] = 1.0 / d as f64;
        }
    }
    Ok(SquareMatrix { n, data })
}

/// Relative random-walk probabilities: slices `I, M, M², …, M^{K−1}`.
#[derive(Clone, Debug)]
pub struct RrwpEncoding {
    pub steps: usize,
    pub slices: Vec<SquareMatrix>,
}

impl RrwpEncoding {
    /// The `K`-vector attached to the node pair `(i, j)`.
    pub fn pair(&self, i: usize, j: usize) -> Vec<f64> {
        self.slices.iter().map(|m| m.get(i, j)).collect()
    }
}

pub fn rrwp(g: &Graph, steps: usize) -> Result<RrwpEncoding, ExpressivenessError> {
    if steps == 0 {
        return Err(ExpressivenessError::Precondition("RRWP needs at least one step".into()));
    }
    let m = transition_matrix(g)?;
    let mut slices = Vec::with_capacity(steps);
    slices.push(SquareMatrix::identity(g.num_nodes()));
    for l in 1..steps {
        let next = slices[l - 1].matmul(&m);
        slices.push(next);
    }
    Ok(RrwpEncoding { steps, slices })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
}

/// `π_j = d(j) / 2|E|`.
pub fn stationary(g: &Graph) -> Result<StationaryDistribution, ExpressivenessError> {
    if let Some(v) = (0..g.num_nodes()).find(|&v| g.degree(v) == 0) {
        return Err(ExpressivenessError::DegreeZero(v));
    }
    let two_m = 2.0 * g.num_edges() as f64;
    Ok(StationaryDistribution { pi: (0..g.num_nodes()).map(|v| g.degree(v) as f64 / two_m).collect() })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ConvergenceReport {
    /// `max_{i,j} |M^l_{ij} − π_j|` for `l = 0..steps-1`.
    pub deviations: Vec<f64>,
    /// `exp` of the least-squares slope of `ln deviation` over steps with
    /// deviation above 1e-12.
    pub fitted_rate: f64,
    /// Smallest `C` with `deviation(l) ≤ C·rate^l` over the measured steps.
    pub envelope_constant: f64,
}

impl ConvergenceReport {
    /// Right-to-left running maximum of the deviations.
    pub fn envelope(&self) -> Vec<f64> {
        let mut env = self.deviations.clone();
        for l in (0..env.len().saturating_sub(1)).rev() {
            env[l] = env[l].max(env[l + 1]);
        }
        env
    }

    /// The envelope is non-increasing and ends strictly below where it starts.
    pub fn envelope_decays(&self) -> bool {
        let env = self.envelope();
        env.len() >= 2 && env.last() < env.first()
    }

    pub fn within_geometric_envelope(&self, rel_tol: f64) -> bool {
        self.deviations.iter().enumerate().all(|(l, &d)| {
            d <= self.envelope_constant * self.fitted_rate.powi(l as i32) * (1.0 + rel_tol)
        })
    }
}

const FIT_FLOOR: f64 = 1e-12;

pub fn rrwp_convergence_report(g: &Graph, steps: usize) -> Result<ConvergenceReport, ExpressivenessError> {
    if !g.is_connected() {
        return Err(ExpressivenessError::Precondition("graph is disconnected".into()));
    }
    if g.is_bipartite() {
        return Err(ExpressivenessError::Precondition(
            "graph is bipartite: the walk is periodic and does not converge".into(),
        ));
    }
    let enc = rrwp(g, steps)?;
    let pi = stationary(g)?.pi;
    let deviations: Vec<f64> = enc
        .slices
        .iter()
        .map(|m| {
            (0..m.n)
                .flat_map(|i| m.row(i).iter().zip(&pi).map(|(x, p)| (x - p).abs()))
                .fold(0.0, f64::max)
        })
        .collect();

    let points: Vec<(f64, f64)> = deviations
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > FIT_FLOOR)
        .map(|(l, &d)| (l as f64, d.ln()))
        .collect();
    let fitted_rate = if points.len() >= 2 {
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxy / sxx).exp()
    } else {
        0.0
    };
    let envelope_constant = if fitted_rate > 0.0 {
        deviations
            .iter()
            .enumerate()
            .map(|(l, &d)| d / fitted_rate.powi(l as i32))
            .fold(0.0, f64::max)
    } else {
        deviations.first().copied().unwrap_or(0.0)
    };
    Ok(ConvergenceReport { deviations, fitted_rate, envelope_constant })
}
