mod common;

use std::time::Duration;

use cliquepart::bench::{
    read_records_csv, run_benchmark, summarize, write_records_csv, BenchConfig, BenchRecord, Eos, RunStatus,
};
use cliquepart::engine::SolveConfig;
use cliquepart::io::write_edge_list;
use cliquepart::oracle::brute_force_optimum;
use common::random_signed_graph;
use proptest::prelude::*;

fn write_manifest(dir: &std::path::Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("manifest.json");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn empty_manifest_gives_no_records() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(dir.path(), "[]");
    assert!(run_benchmark(&m, &BenchConfig::default()).unwrap().is_empty());
}

#[test]
fn missing_instance_is_marked_failed_and_run_continues() {
    let dir = tempfile::tempdir().unwrap();
    let g = random_signed_graph(1, 7, 0.5, 5);
    write_edge_list(&g, dir.path().join("g.txt")).unwrap();
    let (opt, _) = brute_force_optimum(&g).unwrap();
    let m = write_manifest(
        dir.path(),
        &format!(r#"[{{"path":"nope.txt"}},{{"path":"g.txt","format":"edge-list","optimum":{opt}}}]"#),
    );
    let recs = run_benchmark(&m, &BenchConfig::default()).unwrap();
    assert_eq!(recs.len(), 6);
    assert!(recs[..3].iter().all(|r| r.status == RunStatus::Failed && r.objective.is_none()));
    for r in &recs[3..] {
        assert_eq!(r.objective, Some(opt));
        assert_eq!(r.eos, Some(Eos::Value(0.0)));
        assert!(r.gap.unwrap() <= 1e-6);
    }
    assert_eq!(recs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![0, 1, 2, 0, 1, 2]);
    let s = summarize(&recs);
    assert_eq!(s.len(), 2);
    assert_eq!((s[0].failed, s[0].objective_mean), (3, None));
    assert_eq!((s[1].objective_mean, s[1].objective_std), (Some(opt), Some(0.0)));
}

#[test]
fn tiny_time_limit_records_are_valid() {
    let dir = tempfile::tempdir().unwrap();
    let mut entries = Vec::new();
    let mut optima = Vec::new();
    for seed in 0..3 {
        let g = random_signed_graph(40 + seed, 12, 0.6, 5);
        optima.push(brute_force_optimum(&g).unwrap().0);
        write_edge_list(&g, dir.path().join(format!("g{seed}.txt"))).unwrap();
        entries.push(format!(r#"{{"path":"g{seed}.txt"}}"#));
    }
    let m = write_manifest(dir.path(), &format!("[{}]", entries.join(",")));
    let cfg = BenchConfig {
        solve: SolveConfig { time_limit: Some(Duration::from_nanos(1)), ..SolveConfig::with_gap(1e-9) },
        runs: 1,
        ..BenchConfig::default()
    };
    let recs = run_benchmark(&m, &cfg).unwrap();
    for (r, opt) in recs.iter().zip(&optima) {
        assert_eq!(r.status, RunStatus::TimeLimit);
        assert!(r.objective.unwrap() <= *opt);
        if r.objective.unwrap() < *opt {
            assert!(r.gap.unwrap() > 0.0);
        }
    }
}

#[test]
fn parallel_instances_keep_manifest_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut entries = Vec::new();
    for seed in 0..4 {
        write_edge_list(&random_signed_graph(seed, 8, 0.5, 5), dir.path().join(format!("h{seed}.txt"))).unwrap();
        entries.push(format!(r#"{{"path":"h{seed}.txt"}}"#));
    }
    let m = write_manifest(dir.path(), &format!("[{}]", entries.join(",")));
    let seq = run_benchmark(&m, &BenchConfig { runs: 1, ..BenchConfig::default() }).unwrap();
    let par = run_benchmark(&m, &BenchConfig { runs: 1, parallel_instances: 3, ..BenchConfig::default() }).unwrap();
    let key = |r: &BenchRecord| (r.instance.clone(), r.objective);
    assert_eq!(seq.iter().map(key).collect::<Vec<_>>(), par.iter().map(key).collect::<Vec<_>>());
}

fn status() -> impl Strategy<Value = RunStatus> {
    prop_oneof![
        Just(RunStatus::GapReached),
        Just(RunStatus::TimeLimit),
        Just(RunStatus::Exhausted),
        Just(RunStatus::HeuristicOnly),
        Just(RunStatus::Failed),
    ]
}

fn record() -> impl Strategy<Value = BenchRecord> {
    (
        "[a-z,\" ]{1,12}",
        (0usize..500, 0usize..5000),
        proptest::option::of(-1e6f64..1e6),
        proptest::option::of(-1e6f64..1e6),
        any::<bool>(),
        (0f64..100.0, proptest::option::of(0f64..1.0), status(), any::<u64>()),
    )
        .prop_map(|(instance, (n, m), objective, known_optimum, undefined, (t, gap, status, seed))| {
            let eos = known_optimum.map(|o| if undefined { Eos::Undefined } else { Eos::of(objective.unwrap_or(0.0), o) });
            BenchRecord {
                instance,
                n,
                m,
                method: "branch-and-cut".into(),
                objective,
                known_optimum,
                eos,
                wall_time_secs: t,
                gap,
                status,
                seed,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn csv_roundtrip(recs in proptest::collection::vec(record(), 0..8)) {
        let mut buf = Vec::new();
        write_records_csv(&recs, &mut buf).unwrap();
        prop_assert_eq!(read_records_csv(buf.as_slice()).unwrap(), recs.clone());
        let json = serde_json::to_string(&recs).unwrap();
        prop_assert_eq!(serde_json::from_str::<Vec<BenchRecord>>(&json).unwrap(), recs);
    }
}
