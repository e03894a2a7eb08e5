//! The `tigt` command line, callable in-process through [`execute`].

pub mod config;
pub mod error;

use std::path::{Path, PathBuf};
use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use tigt_core::expressiveness::theorems::{verify_theorems, TheoremGraphs};
use tigt_core::expressiveness::{
    augmented_wl1_distinguishes, distinguish_by_biconnectivity, distinguish_by_cycles, rrwp_convergence_report,
    stationary, wl1_distinguishes, wl3_distinguishes, Verdict,
};
use tigt_core::graph::{generate_csl_dataset, read_graph, write_csl_dataset, Graph, CSL_SKIPS};
use tigt_core::topology::analyze;
use tigt_core::train::{run_ablation_suite, train_csl};

use config::{load_config, RunConfig};
pub use error::CliError;

#[derive(Parser)]
#[command(name = "tigt", version, about = "Topology-informed graph transformer lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a CSL dataset as edge-list files plus manifest.json.
    GenCsl {
        #[arg(long, default_value_t = 41)]
        nodes: usize,
        #[arg(long, value_delimiter = ',', default_values_t = CSL_SKIPS)]
        skips: Vec<usize>,
        #[arg(long, default_value_t = 15)]
        copies: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cycle basis, Euler invariant and cut structure of one graph.
    Analyze { graph: PathBuf },
    /// Run every isomorphism oracle on a pair of graphs.
    Distinguish {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::All)]
        method: Method,
    },
    /// Check the four built-in expressiveness results.
    VerifyTheorems {
        /// Run a single theorem (1-4).
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        only: Option<u8>,
        /// Replace a built-in graph, as NAME=FILE (e.g. shrikhande=tampered.txt).
        #[arg(long = "override", value_name = "NAME=FILE")]
        overrides: Vec<String>,
    },
    /// Stationary distribution and random-walk convergence of one graph.
    Markov {
        graph: PathBuf,
        #[arg(long, default_value_t = 51)]
        steps: usize,
    },
    /// Train on CSL and print the run report.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train every ablation variant and print a CSV table.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Number of seeds; runs seeds 0..N.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    All,
    Wl1,
    AugmentedWl1,
    Wl3,
    Cycles,
    Biconnectivity,
}

fn with_schema<T: Serialize>(schema: &str, value: &T) -> Result<Value, CliError> {
    let mut v = serde_json::to_value(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    match v.as_object_mut() {
        Some(map) => {
            map.insert("schema".into(), json!(schema));
            Ok(v)
        }
        None => Ok(json!({ "schema": schema, "value": v })),
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values always serialize")
}

/// A closed pipe is not an error.
fn say(out: &mut dyn Write, text: &str) {
    let _ = writeln!(out, "{text}");
}

fn emit(out: &mut dyn Write, text: &str, file: Option<&Path>) -> Result<(), CliError> {
    match file {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            say(out, text);
            Ok(())
        }
    }
}

fn resolve_run(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(n) = args.seeds {
        cfg.train.seeds = (0..n).collect();
    }
    if let Some(w) = args.workers {
        cfg.train.workers = w;
    }
    if let Some(e) = args.epochs {
        cfg.train.epochs = e;
    }
    if let Some(l) = args.layers {
        cfg.model.num_layers = l;
    }
    Ok(cfg)
}

fn verdict_json(v: Result<Verdict, impl std::fmt::Display>) -> Value {
    match v {
        Ok(v) => json!({ "distinguished": v.distinguished, "witness": v.witness }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn distinguish(g: &Graph, h: &Graph, method: Method) -> Value {
    let want = |m: Method| method == Method::All || method == m;
    let mut out = serde_json::Map::new();
    out.insert("schema".into(), json!("tigt/distinguish/v1"));
    if want(Method::Wl1) {
        out.insert("wl1".into(), json!({ "distinguished": wl1_distinguishes(g, h) }));
    }
    if want(Method::AugmentedWl1) {
        out.insert("augmented_wl1".into(), json!({ "distinguished": augmented_wl1_distinguishes(g, h) }));
    }
    if want(Method::Wl3) {
        let v = match wl3_distinguishes(g, h) {
            Ok(b) => json!({ "distinguished": b }),
            Err(e) => json!({ "error": e.to_string() }),
        };
        out.insert("wl3".into(), v);
    }
    if want(Method::Cycles) {
        out.insert("cycles".into(), verdict_json(distinguish_by_cycles(g, h)));
    }
    if want(Method::Biconnectivity) {
        out.insert("biconnectivity".into(), verdict_json(distinguish_by_biconnectivity(g, h)));
    }
    Value::Object(out)
}

fn apply_override(graphs: &mut TheoremGraphs, arg: &str) -> Result<(), CliError> {
    let (name, file) =
        arg.split_once('=').ok_or_else(|| CliError::Usage(format!("--override expects NAME=FILE, got `{arg}`")))?;
    let g = read_graph(file)?;
    let slot = match name {
        "csl_a" => &mut graphs.csl_a,
        "csl_b" => &mut graphs.csl_b,
        "hexagon" => &mut graphs.hexagon,
        "two_triangles" => &mut graphs.two_triangles,
        "rook" => &mut graphs.rook,
        "shrikhande" => &mut graphs.shrikhande,
        "bowtie" => &mut graphs.bowtie,
        "chorded_pentagon" => &mut graphs.chorded_pentagon,
        "triangle" => &mut graphs.triangle,
        other => return Err(CliError::Usage(format!("unknown theorem graph `{other}`"))),
    };
    *slot = g;
    Ok(())
}

fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::GenCsl { nodes, skips, copies, seed, out } => {
            let samples = generate_csl_dataset(nodes, &skips, copies, seed)?;
            let manifest = write_csl_dataset(&out, &samples)?;
            let summary = json!({
                "schema": "tigt/gen-csl/v1",
                "out": out.display().to_string(),
                "graphs": manifest.len(),
                "manifest": out.join("manifest.json").display().to_string(),
            });
            emit(stdout, &pretty(&summary), None)
        }
        Command::Analyze { graph } => {
            let g = read_graph(&graph)?;
            emit(stdout, &pretty(&with_schema("tigt/topology-report/v1", &analyze(&g))?), None)
        }
        Command::Distinguish { first, second, method } => {
            let (g, h) = (read_graph(&first)?, read_graph(&second)?);
            emit(stdout, &pretty(&distinguish(&g, &h, method)), None)
        }
        Command::VerifyTheorems { only, overrides } => {
            let mut graphs = TheoremGraphs::default();
            for o in &overrides {
                apply_override(&mut graphs, o)?;
            }
            let summary = verify_theorems(only, &graphs);
            for r in &summary.records {
                let v = with_schema("tigt/verdict-record/v1", r)?;
                say(stdout, &serde_json::to_string(&v).expect("JSON values always serialize"));
            }
            say(stdout, &summary.summary_line());
            if summary.all_pass() {
                Ok(())
            } else {
                let failed: Vec<String> =
                    summary.checked.iter().filter(|t| !summary.verified.contains(t)).map(|t| t.to_string()).collect();
                Err(CliError::Verification(format!("theorem checks failed: {}", failed.join(","))))
            }
        }
        Command::Markov { graph, steps } => {
            let g = read_graph(&graph)?;
            let pi = stationary(&g).map_err(|e| CliError::Usage(e.to_string()))?;
            let convergence = match rrwp_convergence_report(&g, steps) {
                Ok(r) => json!({
                    "deviations": r.deviations,
                    "fitted_rate": r.fitted_rate,
                    "envelope_constant": r.envelope_constant,
                    "envelope_decays": r.envelope_decays(),
                }),
                Err(e) => json!({ "error": e.to_string() }),
            };
            let report = json!({
                "schema": "tigt/markov/v1",
                "nodes": g.num_nodes(),
                "steps": steps,
                "stationary": pi.pi,
                "convergence": convergence,
            });
            emit(stdout, &pretty(&report), None)
        }
        Command::Train { run, out } => {
            let cfg = resolve_run(&run)?;
            let report = train_csl(&cfg.model, &cfg.train)?;
            emit(stdout, &pretty(&with_schema("tigt/run-report/v1", &report)?), out.as_deref())
        }
        Command::Ablate { run, out } => {
            let cfg = resolve_run(&run)?;
            let table = run_ablation_suite(&cfg.model, &cfg.train)?;
            let mut buf = Vec::new();
            table.write_csv(&mut buf).map_err(|e| CliError::Runtime(e.to_string()))?;
            let text = String::from_utf8(buf).map_err(|e| CliError::Runtime(e.to_string()))?;
            for row in table.rows.iter().filter(|r| r.flagged) {
                say(stderr, &format!("warning: variant {} beats the full model by more than two standard deviations", row.variant));
            }
            emit(stdout, text.trim_end(), out.as_deref())
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to `stderr` as one `error[kind]: ...` line.
pub fn execute<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                say(stdout, e.to_string().trim_end());
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let err = CliError::Usage(first.trim_start_matches("error: ").to_string());
            say(stderr, &err.line());
            return err.exit_code();
        }
    };
    match run(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            say(stderr, &e.line());
            e.exit_code()
        }
    }
}
