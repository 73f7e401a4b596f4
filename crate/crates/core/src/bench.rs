//! Batch runs over instance files, with CSV and JSON persistence.

use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{solve, solve_heuristic_only, SolveConfig, SolveStatus};
use crate::error::{Error, Result};
use crate::io::{load_graph, GraphFormat};

/// Extent of sub-optimality `1 - objective / optimum`; `None` marks the
/// undefined case of a non-positive optimum.
pub fn eos(objective: f64, optimum: f64) -> Option<f64> {
    (optimum > 0.0).then(|| 1.0 - objective / optimum)
}

/// Modularity flavour: a partition with non-positive modularity scores 1.
pub fn eos_modularity(modularity: f64, optimum: f64) -> f64 {
    if modularity <= 0.0 {
        1.0
    } else {
        eos(modularity, optimum).unwrap_or(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Eos {
    Value(f64),
    Undefined,
}

impl Eos {
    pub fn of(objective: f64, optimum: f64) -> Self {
        eos(objective, optimum).map_or(Self::Undefined, Self::Value)
    }
}

impl fmt::Display for Eos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Value(v) => write!(f, "{v}"),
            Self::Undefined => f.write_str("undefined"),
        }
    }
}

impl FromStr for Eos {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "undefined" => Ok(Self::Undefined),
            v => v.parse().map(Self::Value).map_err(|e| Error::InvalidInput(format!("bad EOS {v:?}: {e}"))),
        }
    }
}

impl Serialize for Eos {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        match self {
            Self::Value(v) => s.serialize_f64(*v),
            Self::Undefined => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Eos {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Self::Value(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    GapReached,
    TimeLimit,
    Exhausted,
    HeuristicOnly,
    /// The instance could not be loaded or solved.
    Failed,
}

impl From<SolveStatus> for RunStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::GapReached => Self::GapReached,
            SolveStatus::TimeLimit => Self::TimeLimit,
            SolveStatus::Exhausted => Self::Exhausted,
            SolveStatus::HeuristicOnly => Self::HeuristicOnly,
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for RunStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "GapReached" => Self::GapReached,
            "TimeLimit" => Self::TimeLimit,
            "Exhausted" => Self::Exhausted,
            "HeuristicOnly" => Self::HeuristicOnly,
            "Failed" => Self::Failed,
            other => return Err(Error::InvalidInput(format!("unknown run status {other:?}"))),
        })
    }
}

/// One run of one method on one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub method: String,
    pub objective: Option<f64>,
    pub known_optimum: Option<f64>,
    pub eos: Option<Eos>,
    pub wall_time_secs: f64,
    pub gap: Option<f64>,
    pub status: RunStatus,
    pub seed: u64,
}

const CSV_HEADER: [&str; 11] =
    ["instance", "n", "m", "method", "objective", "known_optimum", "eos", "wall_time_secs", "gap", "status", "seed"];

fn opt_cell<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn parse_cell<T: FromStr>(line: usize, name: &str, s: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    s.parse().map_err(|e| Error::Parse { line, msg: format!("column {name}: {e}") })
}

fn parse_opt<T: FromStr>(line: usize, name: &str, s: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    if s.is_empty() {
        Ok(None)
    } else {
        parse_cell(line, name, s).map(Some)
    }
}

pub fn write_records_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.instance.clone(),
            r.n.to_string(),
            r.m.to_string(),
            r.method.clone(),
            opt_cell(&r.objective),
            opt_cell(&r.known_optimum),
            opt_cell(&r.eos),
            r.wall_time_secs.to_string(),
            opt_cell(&r.gap),
            r.status.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<BenchRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    if rdr.headers()?.iter().ne(CSV_HEADER) {
        return Err(Error::Parse { line: 1, msg: "unexpected benchmark CSV header".into() });
    }
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Parse { line, msg: format!("expected {} fields", CSV_HEADER.len()) });
        }
        out.push(BenchRecord {
            instance: rec[0].to_string(),
            n: parse_cell(line, "n", &rec[1])?,
            m: parse_cell(line, "m", &rec[2])?,
            method: rec[3].to_string(),
            objective: parse_opt(line, "objective", &rec[4])?,
            known_optimum: parse_opt(line, "known_optimum", &rec[5])?,
            eos: parse_opt(line, "eos", &rec[6])?,
            wall_time_secs: parse_cell(line, "wall_time_secs", &rec[7])?,
            gap: parse_opt(line, "gap", &rec[8])?,
            status: parse_cell(line, "status", &rec[9])?,
            seed: parse_cell(line, "seed", &rec[10])?,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    #[serde(default)]
    pub format: GraphFormat,
    #[serde(default)]
    pub optimum: Option<f64>,
}

/// Reads a JSON list of entries; relative paths are taken from the
/// manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let mut entries: Vec<ManifestEntry> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let base = path.parent().unwrap_or(Path::new(""));
    for e in &mut entries {
        if e.path.is_relative() {
            e.path = base.join(&e.path);
        }
    }
    Ok(entries)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub solve: SolveConfig,
    pub runs: usize,
    pub heuristic_only: bool,
    pub parallel_instances: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { solve: SolveConfig::default(), runs: 3, heuristic_only: false, parallel_instances: 1 }
    }
}

impl BenchConfig {
    pub fn method(&self) -> &'static str {
        if self.heuristic_only {
            "heuristic"
        } else {
            "branch-and-cut"
        }
    }
}

fn instance_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn run_entry(entry: &ManifestEntry, cfg: &BenchConfig) -> Vec<BenchRecord> {
    let name = instance_name(&entry.path);
    let seeds = (0..cfg.runs as u64).map(|r| cfg.solve.seed.wrapping_add(r));
    let graph = match load_graph::<f64>(&entry.path, entry.format) {
        Ok(l) => l.graph,
        Err(_) => {
            return seeds
                .map(|seed| BenchRecord {
                    instance: name.clone(),
                    n: 0,
                    m: 0,
                    method: cfg.method().into(),
                    objective: None,
                    known_optimum: entry.optimum,
                    eos: None,
                    wall_time_secs: 0.0,
                    gap: None,
                    status: RunStatus::Failed,
                    seed,
                })
                .collect()
        }
    };
    seeds
        .map(|seed| {
            let solve_cfg = SolveConfig { seed, ..cfg.solve.clone() };
            let start = std::time::Instant::now();
            let report =
                if cfg.heuristic_only { solve_heuristic_only(&graph, &solve_cfg) } else { solve(&graph, &solve_cfg) };
            let wall_time_secs = start.elapsed().as_secs_f64();
            let mut rec = BenchRecord {
                instance: name.clone(),
                n: graph.node_count(),
                m: graph.edge_count(),
                method: cfg.method().into(),
                objective: None,
                known_optimum: entry.optimum,
                eos: None,
                wall_time_secs,
                gap: None,
                status: RunStatus::Failed,
                seed,
            };
            if let Ok(r) = report {
                rec.objective = Some(r.incumbent);
                rec.eos = entry.optimum.map(|o| Eos::of(r.incumbent, o));
                rec.gap = Some(r.gap);
                rec.status = r.status.into();
            }
            rec
        })
        .collect()
}

/// Runs every manifest entry `cfg.runs` times with consecutive seeds.
/// Unreadable instances yield `Failed` records instead of aborting.
pub fn run_benchmark(manifest: &Path, cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    let entries = read_manifest(manifest)?;
    run_entries(&entries, cfg)
}

pub fn run_entries(entries: &[ManifestEntry], cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if cfg.parallel_instances <= 1 {
        return Ok(entries.iter().flat_map(|e| run_entry(e, cfg)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel_instances)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let per: Vec<Vec<BenchRecord>> = pool.install(|| entries.par_iter().map(|e| run_entry(e, cfg)).collect());
    Ok(per.into_iter().flatten().collect())
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    Some((mean, (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub instance: String,
    pub method: String,
    pub runs: usize,
    pub failed: usize,
    pub objective_mean: Option<f64>,
    pub objective_std: Option<f64>,
    pub time_mean: Option<f64>,
    pub time_std: Option<f64>,
}

/// Groups records by instance and method, in order of first appearance.
pub fn summarize(records: &[BenchRecord]) -> Vec<BenchSummary> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in records {
        let k = (r.instance.as_str(), r.method.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(instance, method)| {
            let group: Vec<&BenchRecord> =
                records.iter().filter(|r| r.instance == instance && r.method == method).collect();
            let ok: Vec<&&BenchRecord> = group.iter().filter(|r| r.status != RunStatus::Failed).collect();
            let obj = mean_std(&ok.iter().filter_map(|r| r.objective).collect::<Vec<_>>());
            let time = mean_std(&ok.iter().map(|r| r.wall_time_secs).collect::<Vec<_>>());
            BenchSummary {
                instance: instance.into(),
                method: method.into(),
                runs: group.len(),
                failed: group.len() - ok.len(),
                objective_mean: obj.map(|o| o.0),
                objective_std: obj.map(|o| o.1),
                time_mean: time.map(|t| t.0),
                time_std: time.map(|t| t.1),
            }
        })
        .collect()
}
