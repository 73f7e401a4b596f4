use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cliquepart::bench::{self, BenchConfig};
use cliquepart::engine::{solve, solve_heuristic_only, SolveConfig};
use cliquepart::io::{load_graph, to_edge_list, GraphFormat};
use cliquepart::oracle::brute_force_optimum;
use cliquepart::reductions::{self, AttributeMatrix, BaParams, ReturnsMatrix};
use cliquepart::{Graph, Partition};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "cliquepart", version, about = "Clique partitioning of signed weighted graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance.
    Solve(SolveArgs),
    /// Exact optimum by enumerating every partition (n <= 12).
    Oracle {
        path: PathBuf,
        #[arg(long, default_value = "auto")]
        format: GraphFormat,
    },
    /// Generate a random instance as an edge list.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        #[arg(long, global = true, default_value_t = 0)]
        seed: u64,
        /// Write here instead of stdout.
        #[arg(long, short, global = true)]
        out: Option<PathBuf>,
    },
    /// Build an instance from another problem or from data.
    Reduce {
        #[command(subcommand)]
        kind: ReduceKind,
        #[arg(long, short, global = true)]
        out: Option<PathBuf>,
        /// Also write the original id of each node, one per line.
        #[arg(long, global = true)]
        labels: Option<PathBuf>,
    },
    /// Run every instance in a JSON manifest several times.
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum GenKind {
    Ba {
        #[arg(long, default_value_t = 100)]
        min_nodes: usize,
        #[arg(long, default_value_t = 150)]
        max_nodes: usize,
        #[arg(long, default_value_t = 3)]
        min_attach: usize,
        #[arg(long, default_value_t = 6)]
        max_attach: usize,
        #[arg(long, default_value_t = 10, help = "Weights are drawn from [-w, w] without 0")]
        max_weight: i64,
    },
    Correlation {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        rows: usize,
    },
    Clusedit {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        neg_fraction: f64,
    },
}

#[derive(Subcommand)]
enum ReduceKind {
    Modularity {
        path: PathBuf,
        #[arg(long, default_value = "auto")]
        format: GraphFormat,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
    /// Attribute table (CSV) to agreement weights.
    Abr {
        path: PathBuf,
        #[arg(long)]
        header: bool,
        /// First column names the object.
        #[arg(long)]
        label_column: bool,
    },
    /// Returns table (CSV, header of asset ids) to a correlation network.
    Portfolio { path: PathBuf },
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, default_value_t = 1e-6)]
    gap_tol: f64,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    heuristic_only: bool,
}

impl RunArgs {
    fn config(&self) -> Result<SolveConfig> {
        let time_limit = match self.time_limit {
            Some(t) => Some(Duration::try_from_secs_f64(t).map_err(|e| InputError(format!("time limit: {e}")))?),
            None => None,
        };
        Ok(SolveConfig {
            gap_tolerance: self.gap_tol,
            time_limit,
            seed: self.seed,
            workers: self.workers,
            ..SolveConfig::default()
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputKind {
    Json,
    Csv,
}

#[derive(Args)]
struct SolveArgs {
    path: PathBuf,
    #[arg(long, default_value = "auto")]
    format: GraphFormat,
    #[arg(long, value_enum, default_value = "json")]
    output: OutputKind,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct BenchArgs {
    manifest: PathBuf,
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long, default_value_t = 1)]
    parallel_instances: usize,
    /// Results as CSV; stdout when neither output is given.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

/// Problems with what the user supplied, reported with exit code 2.
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<cliquepart::Error>() {
            return if matches!(e, cliquepart::Error::Inconsistent(_)) { 3 } else { 2 };
        }
    }
    2
}

/// Node label as JSON, numeric when it parses as an integer.
fn label_value(g: &Graph, i: usize) -> Value {
    let l = g.label(i);
    l.parse::<i64>().map_or(Value::String(l), Value::from)
}

fn clusters_json(g: &Graph, p: &Partition) -> Value {
    Value::Array(p.clusters().iter().map(|c| c.iter().map(|&i| label_value(g, i)).collect()).collect())
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn load(path: &Path, format: GraphFormat) -> Result<Graph> {
    let loaded = load_graph::<f64>(path, format).with_context(|| format!("reading {}", path.display()))?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded.graph)
}

fn write_graph(g: &Graph, out: &Option<PathBuf>, labels: &Option<PathBuf>) -> Result<()> {
    sink(out)?.write_all(to_edge_list(g).as_bytes())?;
    if let Some(p) = labels {
        let text: String = (0..g.node_count()).map(|i| g.label(i) + "\n").collect();
        std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn run_solve(a: &SolveArgs) -> Result<()> {
    let g = load(&a.path, a.format)?;
    let cfg = a.run.config()?;
    let r = if a.run.heuristic_only { solve_heuristic_only(&g, &cfg)? } else { solve(&g, &cfg)? };
    let mut out = io::stdout().lock();
    match a.output {
        OutputKind::Json => {
            let v = json!({
                "objective": r.incumbent,
                "bound": r.best_bound,
                "gap": r.gap,
                "status": r.status,
                "clusters": clusters_json(&g, &r.best_partition),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        }
        OutputKind::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["node", "cluster"])?;
            for i in 0..g.node_count() {
                w.write_record([g.label(i), r.best_partition.cluster_of(i).to_string()])?;
            }
            w.flush()?;
            eprintln!("objective {} bound {} gap {} status {:?}", r.incumbent, r.best_bound, r.gap, r.status);
        }
    }
    Ok(())
}

fn run_oracle(path: &Path, format: GraphFormat) -> Result<()> {
    let g = load(path, format)?;
    let (opt, p) = brute_force_optimum(&g)?;
    println!("{}", serde_json::to_string_pretty(&json!({ "objective": opt, "clusters": clusters_json(&g, &p) }))?);
    Ok(())
}

fn run_gen(kind: &GenKind, seed: u64, out: &Option<PathBuf>) -> Result<()> {
    let g: Graph = match *kind {
        GenKind::Ba { min_nodes, max_nodes, min_attach, max_attach, max_weight } => reductions::gen_ba_weighted(
            BaParams {
                nodes: (min_nodes, max_nodes),
                attach: (min_attach, max_attach),
                weights: (-max_weight, max_weight),
            },
            seed,
        )?,
        GenKind::Correlation { n, rows } => reductions::gen_correlation_instance(n, rows, seed)?,
        GenKind::Clusedit { n, neg_fraction } => reductions::gen_clusedit_instance(n, neg_fraction, seed)?,
    };
    write_graph(&g, out, &None)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn run_reduce(kind: &ReduceKind, out: &Option<PathBuf>, labels: &Option<PathBuf>) -> Result<()> {
    let g: Graph = match kind {
        ReduceKind::Modularity { path, format, gamma } => reductions::modularity_to_cp(&load(path, *format)?, *gamma)?,
        ReduceKind::Abr { path, header, label_column } => {
            reductions::abr_to_cp(&AttributeMatrix::from_csv(open(path)?, *header, *label_column)?)?
        }
        ReduceKind::Portfolio { path } => reductions::fisher_portfolio_graph(&ReturnsMatrix::from_csv(open(path)?)?)?.graph,
    };
    write_graph(&g, out, labels)
}

fn run_bench(a: &BenchArgs) -> Result<()> {
    let cfg = BenchConfig {
        solve: a.run.config()?,
        runs: a.runs,
        heuristic_only: a.run.heuristic_only,
        parallel_instances: a.parallel_instances,
    };
    let records = bench::run_benchmark(&a.manifest, &cfg).with_context(|| format!("manifest {}", a.manifest.display()))?;
    if let Some(p) = &a.csv {
        bench::write_records_csv(&records, File::create(p)?)?;
    }
    if let Some(p) = &a.json {
        serde_json::to_writer_pretty(File::create(p)?, &records)?;
    }
    if a.csv.is_none() && a.json.is_none() {
        bench::write_records_csv(&records, io::stdout().lock())?;
    }
    for s in bench::summarize(&records) {
        let fmt = |m: Option<f64>, sd: Option<f64>| match (m, sd) {
            (Some(m), Some(sd)) => format!("{m:.6} ± {sd:.6}"),
            _ => "n/a".into(),
        };
        eprintln!(
            "{} [{}]: objective {}, time {} s, {} failed of {}",
            s.instance,
            s.method,
            fmt(s.objective_mean, s.objective_std),
            fmt(s.time_mean, s.time_std),
            s.failed,
            s.runs
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Oracle { path, format } => run_oracle(path, *format),
        Command::Gen { kind, seed, out } => run_gen(kind, *seed, out),
        Command::Reduce { kind, out, labels } => run_reduce(kind, out, labels),
        Command::Bench(a) => run_bench(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
