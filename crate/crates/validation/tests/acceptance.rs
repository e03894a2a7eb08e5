//! One test per acceptance criterion. Each prints a single
//! `PASS`/`FAIL criterion N: ...` line and then asserts it.
//!
//! Commands go through the same entry point as the `tigt` binary. The
//! training criteria use the checked-in configs and take several minutes
//! each; they hold a lock so their timings are not inflated by one another.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tigt_core::expressiveness::{
    distinguish_by_biconnectivity, distinguish_by_cycles, rrwp_convergence_report, stationary, wl3_distinguishes,
};
use tigt_core::graph::{
    bowtie, cycle, cycle_with_chord, generate_csl, generate_rook_4x4, generate_shrikhande, random_gnm,
    random_permutation, Graph, NodeFeatures,
};
use tigt_core::model::{GraphInput, Tigt, TigtConfig};
use tigt_core::tensor::gradcheck::{max_rel_error, relative_error, Build};
use tigt_core::tensor::{Tape, Tensor, Var};
use tigt_core::topology::{articulation_vertices, cycle_basis};
use tigt_core::train::{csl_inputs, TrainConfig};

const CSL_L2_MIN: f64 = 0.95;
const CSL_L1_MIN: f64 = 0.90;
const CSL_BUDGET: Duration = Duration::from_secs(30 * 60);
const DEEP_MIN: f64 = 0.95;
const ABLATED_MAX: f64 = 0.30;
const THEOREM2_BUDGET: Duration = Duration::from_secs(120);
const RANDOM_PAIRS: usize = 20;
const PAIR_MAX_NODES: usize = 9;
const WALK_STEPS: usize = 51;
const DEVIATION_AT_50_MAX: f64 = 1e-2;
const STATIONARY_TOL: f64 = 1e-12;
const TOPOLOGY_GRAPHS: usize = 1000;
const TOPOLOGY_MAX_NODES: usize = 12;
const OP_CASES: u64 = 20;
const OP_REL_TOL: f64 = 1e-4;
const OP_EPS: f64 = 1e-5;
const MODEL_PARAMS_CHECKED: usize = 10;
const MODEL_REL_TOL: f64 = 1e-3;
const MODEL_EPS: f64 = 1e-5;
const INVARIANCE_TRIALS: u64 = 50;
const INVARIANCE_TOL: f64 = 1e-9;

static TRAINING: Mutex<()> = Mutex::new(());

fn report(criterion: u8, pass: bool, detail: String) {
    let line = format!("{} criterion {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
    // Straight to stdout so the line shows even when the test passes.
    let _ = writeln!(std::io::stdout(), "{line}");
    assert!(pass, "{line}");
}

/// Runs a `tigt` command line; returns exit code, stdout and stderr.
fn tigt(args: &[&str]) -> (u8, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = tigt_cli::execute(std::iter::once("tigt").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

/// Runs `tigt train` and returns the report and wall time.
fn train(config_file: &str, extra: &[&str]) -> (Value, Duration) {
    let _guard = TRAINING.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let cfg = config(config_file);
    let mut args = vec!["train", "--config", cfg.to_str().unwrap(), "--workers", "1"];
    args.extend_from_slice(extra);
    let (code, out, err) = tigt(&args);
    let elapsed = start.elapsed();
    assert_eq!(code, 0, "{err}");
    (serde_json::from_str(&out).expect("run report JSON"), elapsed)
}

fn accuracy_summary(r: &Value) -> String {
    let per_seed: Vec<String> =
        r["seeds"].as_array().unwrap().iter().map(|s| format!("{:.3}", s["test_accuracy"].as_f64().unwrap())).collect();
    format!(
        "{:.4} ± {:.4} over seeds [{}]",
        r["mean_test_accuracy"].as_f64().unwrap(),
        r["std_test_accuracy"].as_f64().unwrap(),
        per_seed.join(", ")
    )
}

#[test]
fn criterion_1_csl_reproduction() {
    let (two, t2) = train("csl.toml", &[]);
    let (one, t1) = train("csl.toml", &["--layers", "1"]);
    let (a2, a1) = (two["mean_test_accuracy"].as_f64().unwrap(), one["mean_test_accuracy"].as_f64().unwrap());
    let total = t1 + t2;
    report(
        1,
        a2 >= CSL_L2_MIN && a1 >= CSL_L1_MIN && total <= CSL_BUDGET,
        format!(
            "CSL L=2 {} (need ≥ {CSL_L2_MIN}), L=1 {} (need ≥ {CSL_L1_MIN}), {:.0}s (budget {}s)",
            accuracy_summary(&two),
            accuracy_summary(&one),
            total.as_secs_f64(),
            CSL_BUDGET.as_secs()
        ),
    );
}

#[test]
fn criterion_2_depth_robustness() {
    let (five, t) = train("csl.toml", &["--layers", "5"]);
    let acc = five["mean_test_accuracy"].as_f64().unwrap();
    report(
        2,
        acc >= DEEP_MIN,
        format!("CSL L=5 {} (need ≥ {DEEP_MIN}), {:.0}s", accuracy_summary(&five), t.as_secs_f64()),
    );
}

#[test]
fn criterion_3_baseline_collapse() {
    let (ablated, t) = train("csl_ablated.toml", &[]);
    let acc = ablated["mean_test_accuracy"].as_f64().unwrap();
    report(
        3,
        acc < ABLATED_MAX,
        format!("ablated model {} (need < {ABLATED_MAX}), {:.0}s", accuracy_summary(&ablated), t.as_secs_f64()),
    );
}

#[test]
fn criterion_4_theorem_1() {
    let (code, text, _) = tigt(&["verify-theorems", "--only", "1"]);
    let summary = text.lines().last().unwrap_or("").to_string();
    let records: Vec<Value> = text.lines().filter_map(|l| serde_json::from_str(l).ok()).collect();
    let checks: Vec<String> = records
        .iter()
        .map(|r| format!("{}: {} -> {}", r["pair"].as_str().unwrap(), r["check"].as_str().unwrap(), r["observed"]))
        .collect();
    report(
        4,
        code == 0 && summary == "1/1 theorems verified" && records.iter().all(|r| r["pass"] == true),
        format!("verify-theorems --only 1: {summary} [{}]", checks.join(", ")),
    );
}

#[test]
fn criterion_5_theorem_2() {
    let start = Instant::now();
    let (rook, shrikhande) = (generate_rook_4x4(), generate_shrikhande());
    let wl3 = wl3_distinguishes(&rook, &shrikhande).unwrap();
    let cycles = distinguish_by_cycles(&rook, &shrikhande).unwrap();
    let elapsed = start.elapsed();
    report(
        5,
        !wl3 && cycles.distinguished && elapsed <= THEOREM2_BUDGET,
        format!(
            "rook vs shrikhande: 3-WL distinguished={wl3} (need false), cycles distinguished={} ({}), {:.2}s",
            cycles.distinguished,
            cycles.witness,
            elapsed.as_secs_f64()
        ),
    );
}

/// (components, |E|-|V|+components) after deleting a vertex or an edge,
/// from the raw edge list with a union-find.
fn residual(g: &Graph, vertex: Option<usize>, edge: Option<(usize, usize)>) -> (usize, usize) {
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    let n = g.num_nodes();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut edges = 0;
    for &(u, v) in g.edges() {
        if Some(u) == vertex || Some(v) == vertex || Some((u, v)) == edge {
            continue;
        }
        edges += 1;
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        parent[a] = b;
    }
    let comps = (0..n).filter(|&v| Some(v) != vertex && find(&mut parent, v) == v).count();
    (comps, edges + comps - (n - usize::from(vertex.is_some())))
}

fn oracle_distinguishes(g: &Graph, h: &Graph) -> bool {
    let profile = |x: &Graph| {
        let mut vs: Vec<_> = (0..x.num_nodes()).map(|v| residual(x, Some(v), None)).collect();
        let mut es: Vec<_> = x.edges().iter().map(|&e| residual(x, None, Some(e))).collect();
        vs.sort_unstable();
        es.sort_unstable();
        (vs, es)
    };
    profile(g) != profile(h)
}

/// Same node and edge counts, both connected, exactly one of them biconnected.
fn hypothesis_pair(rng: &mut ChaCha8Rng) -> (Graph, Graph) {
    loop {
        let n = rng.gen_range(4..=PAIR_MAX_NODES);
        let m = rng.gen_range(n..=(n * (n - 1) / 2).min(2 * n));
        let mut pick = |want_cut: bool| {
            (0..500).map(|_| random_gnm(n, m, rng)).find(|g| g.is_connected() && articulation_vertices(g).is_empty() != want_cut)
        };
        if let (Some(g), Some(h)) = (pick(false), pick(true)) {
            return (g, h);
        }
    }
}

#[test]
fn criterion_6_theorem_3() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut pairs = vec![(bowtie(), cycle_with_chord(5))];
    pairs.extend((0..RANDOM_PAIRS).map(|_| hypothesis_pair(&mut rng)));
    let mut separated = 0;
    let mut disagreements = 0;
    for (g, h) in &pairs {
        let ours = distinguish_by_biconnectivity(g, h).unwrap().distinguished;
        separated += usize::from(ours);
        disagreements += usize::from(ours != oracle_distinguishes(g, h));
    }
    report(
        6,
        separated == pairs.len() && disagreements == 0,
        format!(
            "bowtie/C5+chord plus {RANDOM_PAIRS} random pairs (n ≤ {PAIR_MAX_NODES}): {separated}/{} separated, {disagreements} oracle disagreements",
            pairs.len()
        ),
    );
}

#[test]
fn criterion_7_theorem_4() {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, g) in [("C3", cycle(3)), ("CSL(41,2)", generate_csl(41, 2).unwrap())] {
        let r = rrwp_convergence_report(&g, WALK_STEPS).unwrap();
        let at_50 = r.deviations[50];
        let n = g.num_nodes() as f64;
        let pi_err = stationary(&g).unwrap().pi.iter().map(|p| (p - 1.0 / n).abs()).fold(0.0, f64::max);
        pass &= r.fitted_rate < 1.0 && r.envelope_decays() && at_50 < DEVIATION_AT_50_MAX && pi_err <= STATIONARY_TOL;
        parts.push(format!(
            "{name}: γ={:.5}, dev(50)={at_50:.6} (need < {DEVIATION_AT_50_MAX}), |π-1/n|={pi_err:.1e}",
            r.fitted_rate
        ));
    }
    report(7, pass, parts.join("; "));
}

fn gf2_rank(g: &Graph, cycles: &[Vec<usize>]) -> usize {
    let index: HashMap<(usize, usize), usize> = g.edges().iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let mut rows: Vec<u128> = cycles
        .iter()
        .map(|c| {
            (0..c.len()).fold(0u128, |acc, i| {
                let (a, b) = (c[i], c[(i + 1) % c.len()]);
                acc ^ (1u128 << index[&(a.min(b), a.max(b))])
            })
        })
        .collect();
    let mut rank = 0;
    for bit in 0..g.num_edges() {
        let m = 1u128 << bit;
        if let Some(p) = (rank..rows.len()).find(|&r| rows[r] & m != 0) {
            rows.swap(rank, p);
            let pivot = rows[rank];
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && *row & m != 0 {
                    *row ^= pivot;
                }
            }
            rank += 1;
        }
    }
    rank
}

#[test]
fn criterion_8_topology() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    for i in 0..TOPOLOGY_GRAPHS {
        let n = rng.gen_range(1..=TOPOLOGY_MAX_NODES);
        let m = rng.gen_range(0..=n * (n - 1) / 2);
        let g = random_gnm(n, m, &mut rng);
        let basis = cycle_basis(&g);
        let euler = g.num_edges() + g.num_components() - g.num_nodes();
        let walks = basis.cycles.iter().all(|c| (0..c.len()).all(|j| g.has_edge(c[j], c[(j + 1) % c.len()])));
        if basis.len() != euler || !walks || gf2_rank(&g, &basis.cycles) != euler {
            failures.push(i);
        }
    }
    report(
        8,
        failures.is_empty(),
        format!(
            "{TOPOLOGY_GRAPHS} random graphs (n ≤ {TOPOLOGY_MAX_NODES}): {} failures of |basis| = |E|-|V|+c and GF(2) span",
            failures.len()
        ),
    );
}

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Magnitudes in [0.1, 1), so no case sits on the ReLU kink.
fn off_zero(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(0.1..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
    Tensor::new(shape, data).unwrap()
}

/// Scalarizes an op's output through fixed random weights.
fn weigh(t: &mut Tape, y: Var) -> Result<Var, tigt_core::tensor::TensorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let shape = t.shape(y).to_vec();
    let w = t.constant(random(&mut rng, &shape));
    let p = t.mul(y, w)?;
    t.sum_all(p)
}

type Case = (Vec<Tensor>, Box<Build>);
type MakeCase = Box<dyn Fn(&mut ChaCha8Rng) -> Case>;

fn op_cases() -> Vec<(&'static str, MakeCase)> {
    fn d(rng: &mut ChaCha8Rng) -> usize {
        rng.gen_range(1..5)
    }
    let binary = |which: u8| -> MakeCase {
        Box::new(move |rng| {
            let (m, k) = (d(rng), d(rng));
            let second = [vec![m, k], vec![k], vec![1]][rng.gen_range(0..3)].clone();
            let build: Box<Build> = Box::new(move |t, v| {
                let y = match which {
                    0 => t.add(v[0], v[1])?,
                    1 => t.sub(v[0], v[1])?,
                    _ => t.mul(v[0], v[1])?,
                };
                weigh(t, y)
            });
            (vec![random(rng, &[m, k]), random(rng, &second)], build)
        })
    };
    let unary = |which: u8| -> MakeCase {
        Box::new(move |rng| {
            let shape = [d(rng), d(rng)];
            let build: Box<Build> = Box::new(move |t, v| {
                let y = match which {
                    0 => t.tanh(v[0]),
                    1 => t.relu(v[0]),
                    2 => t.sigmoid(v[0]),
                    3 => t.scale(v[0], 1.3),
                    4 => t.softmax(v[0])?,
                    _ => t.transpose(v[0])?,
                };
                weigh(t, y)
            });
            (vec![off_zero(rng, &shape)], build)
        })
    };
    let reduce = |mean: bool| -> MakeCase {
        Box::new(move |rng| {
            let shape = [d(rng), d(rng), d(rng)];
            let axis = rng.gen_range(0..3);
            let build: Box<Build> = Box::new(move |t, v| {
                let y = if mean { t.mean(v[0], axis)? } else { t.sum(v[0], axis)? };
                weigh(t, y)
            });
            (vec![random(rng, &shape)], build)
        })
    };
    vec![
        ("add", binary(0)),
        ("sub", binary(1)),
        ("mul", binary(2)),
        ("tanh", unary(0)),
        ("relu", unary(1)),
        ("sigmoid", unary(2)),
        ("scale", unary(3)),
        ("softmax", unary(4)),
        ("transpose", unary(5)),
        ("sum", reduce(false)),
        ("mean", reduce(true)),
        (
            "sum_all",
            Box::new(|rng| {
                let shape = [d(rng), d(rng)];
                let build: Box<Build> = Box::new(|t, v| {
                    let s = t.tanh(v[0]);
                    t.sum_all(s)
                });
                (vec![random(rng, &shape)], build)
            }),
        ),
        (
            "matmul",
            Box::new(|rng| {
                let (m, k, n) = (d(rng), d(rng), d(rng));
                let build: Box<Build> = Box::new(|t, v| {
                    let y = t.matmul(v[0], v[1])?;
                    weigh(t, y)
                });
                (vec![random(rng, &[m, k]), random(rng, &[k, n])], build)
            }),
        ),
        (
            "concat",
            Box::new(|rng| {
                let (a, b, c) = (d(rng), d(rng), d(rng));
                let axis = rng.gen_range(0..2);
                let other = if axis == 0 { [c, b] } else { [a, c] };
                let build: Box<Build> = Box::new(move |t, v| {
                    let y = t.concat(&[v[0], v[1]], axis)?;
                    weigh(t, y)
                });
                (vec![random(rng, &[a, b]), random(rng, &other)], build)
            }),
        ),
        (
            "narrow",
            Box::new(|rng| {
                let (a, b) = (d(rng), d(rng) + 1);
                let start = rng.gen_range(0..b);
                let build: Box<Build> = Box::new(move |t, v| {
                    let y = t.narrow(v[0], 1, start, b - start)?;
                    weigh(t, y)
                });
                (vec![random(rng, &[a, b])], build)
            }),
        ),
        (
            "reshape",
            Box::new(|rng| {
                let (a, b) = (d(rng), d(rng));
                let build: Box<Build> = Box::new(move |t, v| {
                    let y = t.reshape(v[0], &[b, a])?;
                    weigh(t, y)
                });
                (vec![random(rng, &[a, b])], build)
            }),
        ),
        (
            "embedding_lookup",
            Box::new(|rng| {
                let (vocab, dim) = (d(rng), d(rng));
                let idx: Vec<usize> = (0..d(rng) + 2).map(|_| rng.gen_range(0..vocab)).collect();
                let build: Box<Build> = Box::new(move |t, v| {
                    let y = t.embedding_lookup(v[0], &idx)?;
                    weigh(t, y)
                });
                (vec![random(rng, &[vocab, dim])], build)
            }),
        ),
        (
            "feature_norm",
            Box::new(|rng| {
                let (n, k) = (d(rng), d(rng) + 1);
                let build: Box<Build> = Box::new(|t, v| {
                    let y = t.feature_norm(v[0], v[1], v[2])?;
                    weigh(t, y)
                });
                (vec![random(rng, &[n, k]), random(rng, &[k]), random(rng, &[k])], build)
            }),
        ),
        (
            "cross_entropy",
            Box::new(|rng| {
                let (b, c) = (d(rng), d(rng) + 1);
                let targets: Vec<usize> = (0..b).map(|_| rng.gen_range(0..c)).collect();
                let build: Box<Build> = Box::new(move |t, v| t.cross_entropy(v[0], &targets));
                (vec![random(rng, &[b, c])], build)
            }),
        ),
    ]
}

/// Tape gradient against central differences on randomly chosen scalars of
/// a default-config model, for one batch of CSL graphs.
fn model_gradient_error() -> f64 {
    let cfg = TigtConfig::default();
    let inputs = csl_inputs(&cfg, &TrainConfig { copies_per_class: 1, ..Default::default() }).unwrap();
    let batch: Vec<GraphInput> = inputs.iter().step_by(3).take(4).cloned().collect();
    let targets: Vec<usize> = batch.iter().map(|g| g.label).collect();
    let mut model = Tigt::new(cfg, 11).unwrap();

    let loss = |model: &Tigt, backward: bool| {
        let mut tape = Tape::new();
        let vars = model.params().bind(&mut tape);
        let logits = model.forward(&mut tape, &vars, &batch, None).unwrap();
        let l = tape.cross_entropy(logits, &targets).unwrap();
        let value = tape.value(l).item();
        let grads = backward.then(|| {
            tape.backward(l).unwrap();
            vars.iter().map(|v| tape.grad(*v).unwrap().to_vec()).collect::<Vec<_>>()
        });
        (value, grads)
    };
    let grads = loss(&model, true).1.unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..MODEL_PARAMS_CHECKED {
        let p = rng.gen_range(0..model.params().len());
        let i = rng.gen_range(0..model.params().values()[p].numel());
        let original = model.params().values()[p].data()[i];
        model.params_mut().values_mut()[p].data_mut()[i] = original + MODEL_EPS;
        let up = loss(&model, false).0;
        model.params_mut().values_mut()[p].data_mut()[i] = original - MODEL_EPS;
        let down = loss(&model, false).0;
        model.params_mut().values_mut()[p].data_mut()[i] = original;
        let numeric = (up - down) / (2.0 * MODEL_EPS);
        worst = worst.max(relative_error(grads[p][i], numeric));
    }
    worst
}

#[test]
fn criterion_9_autodiff() {
    let mut failing = Vec::new();
    let mut worst_op = 0.0f64;
    let cases = op_cases();
    for (name, make) in &cases {
        for case in 0..OP_CASES {
            let mut rng = ChaCha8Rng::seed_from_u64(case * 7919 + 1);
            let (inputs, build) = make(&mut rng);
            let err = max_rel_error(&*build, &inputs, OP_EPS).unwrap();
            worst_op = worst_op.max(err);
            if err >= OP_REL_TOL {
                failing.push(format!("{name}#{case}"));
            }
        }
    }
    let model_err = model_gradient_error();
    report(
        9,
        failing.is_empty() && model_err < MODEL_REL_TOL,
        format!(
            "{} ops × {OP_CASES} cases, worst rel err {worst_op:.2e} (need < {OP_REL_TOL}), failing {failing:?}; \
             full model on {MODEL_PARAMS_CHECKED} params worst rel err {model_err:.2e} (need < {MODEL_REL_TOL})",
            cases.len()
        ),
    );
}

#[test]
fn criterion_10_invariance() {
    let cfg = TigtConfig { input_dim: 3, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_logit = 0.0f64;
    let mut worst_node = 0.0f64;
    for trial in 0..INVARIANCE_TRIALS {
        let mut model = Tigt::new(cfg.clone(), trial).unwrap();
        for t in model.params_mut().values_mut() {
            t.data_mut().iter_mut().for_each(|v| *v += rng.gen_range(-0.2..0.2));
        }
        let n = rng.gen_range(2..=12);
        let g = random_gnm(n, rng.gen_range(0..=n * (n - 1) / 2), &mut rng);
        let features = (0..n * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = g.with_features(NodeFeatures::new(3, features)).unwrap();
        let input = GraphInput::from_graph(&g, 0, 3, None).unwrap();
        let perm = random_permutation(n, &mut rng);
        let (a, b) = (model.trace(&input).unwrap(), model.trace(&input.permuted(&perm).unwrap()).unwrap());

        worst_logit = a.logits.iter().zip(&b.logits).map(|(x, y)| (x - y).abs()).fold(worst_logit, f64::max);
        for (x, y) in a.layers.iter().zip(&b.layers) {
            let k = x.shape()[1];
            for (i, &pi) in perm.iter().enumerate() {
                for c in 0..k {
                    worst_node = worst_node.max((x.data()[i * k + c] - y.data()[pi * k + c]).abs());
                }
            }
        }
    }
    report(
        10,
        worst_logit < INVARIANCE_TOL && worst_node < INVARIANCE_TOL,
        format!(
            "{INVARIANCE_TRIALS} trials: max logit change {worst_logit:.1e}, max layer equivariance error {worst_node:.1e} (need < {INVARIANCE_TOL:e})"
        ),
    );
}
