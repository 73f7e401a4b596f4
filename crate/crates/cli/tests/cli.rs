use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cliquepart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cliquepart")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const TRIANGLE: &str = "3 3\n0 1 2\n0 2 2\n1 2 -1\n";

#[test]
fn solve_prints_partition_json() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "t.txt", TRIANGLE);
    let v = json(&cliquepart(&["solve", &g, "--gap-tol", "1e-9"]));
    assert_eq!(v["objective"], 3.0);
    assert_eq!(v["clusters"], serde_json::json!([[0, 1, 2]]));
    assert!(v["bound"].as_f64().unwrap() >= 3.0);
    assert!(v["gap"].as_f64().unwrap() <= 1e-9);
    assert!(v["status"].is_string());
}

#[test]
fn solve_reports_original_ids() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "ids.txt", "3 2\n10 20 1\n20 30 -1\n");
    let v = json(&cliquepart(&["solve", &g]));
    let mut clusters: Vec<Vec<i64>> = serde_json::from_value(v["clusters"].clone()).unwrap();
    clusters.sort();
    assert_eq!(clusters, vec![vec![10, 20], vec![30]]);
}

#[test]
fn solve_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "t.txt", TRIANGLE);
    let out = cliquepart(&["solve", &g, "--output", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("node,cluster"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn oracle_agrees_with_solve() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.txt", "5 6\n0 1 3\n1 2 -2\n2 3 4\n3 4 -1\n0 4 2\n1 3 1\n");
    let a = json(&cliquepart(&["oracle", &g]));
    let b = json(&cliquepart(&["solve", &g, "--gap-tol", "1e-9"]));
    assert_eq!(a["objective"], b["objective"]);
}

#[test]
fn oracle_refuses_large_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "big.txt", "13 1\n0 12 1\n");
    assert_eq!(cliquepart(&["oracle", &g]).status.code(), Some(2));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.txt", "3 1\n0 1 zero\n");
    assert_eq!(cliquepart(&["solve", &bad]).status.code(), Some(2));
    assert_eq!(cliquepart(&["solve", "/nonexistent/graph.txt"]).status.code(), Some(2));
    let g = write(dir.path(), "t.txt", TRIANGLE);
    assert_eq!(cliquepart(&["solve", &g, "--gap-tol", "2"]).status.code(), Some(2));
    assert_eq!(cliquepart(&["solve", &g, "--time-limit", "-1"]).status.code(), Some(2));
}

#[test]
fn tiny_time_limit_still_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("c.txt");
    let g = g.to_str().unwrap();
    assert!(cliquepart(&["gen", "clusedit", "--n", "30", "--seed", "2", "-o", g]).status.success());
    let v = json(&cliquepart(&["solve", g, "--time-limit", "0.000000001"]));
    assert_eq!(v["status"], "TimeLimit");
}

#[test]
fn gen_outputs_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    for kind in [vec!["ba", "--min-nodes", "12", "--max-nodes", "15", "--min-attach", "2", "--max-attach", "3"], vec!["correlation", "--n", "8", "--rows", "20"], vec!["clusedit", "--n", "9"]] {
        let out = dir.path().join(format!("{}.txt", kind[0]));
        let mut args = vec!["gen"];
        args.extend(&kind);
        args.extend(["--seed", "5", "-o", out.to_str().unwrap()]);
        assert!(cliquepart(&args).status.success(), "{kind:?}");
        let v = json(&cliquepart(&["solve", out.to_str().unwrap(), "--heuristic-only"]));
        assert_eq!(v["status"], "HeuristicOnly");
    }
}

#[test]
fn reduce_commands() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "u.txt", "4 3\n0 1 1\n1 2 1\n2 3 1\n");
    let out = cliquepart(&["reduce", "modularity", &g]);
    assert!(out.status.success());
    let header = String::from_utf8(out.stdout).unwrap();
    assert!(header.starts_with("4 "));

    let abr = write(dir.path(), "a.csv", "id,c1,c2\np,x,y\nq,x,y\nr,z,w\n");
    let labels = dir.path().join("labels.txt");
    let out = cliquepart(&["reduce", "abr", &abr, "--header", "--label-column", "--labels", labels.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&labels).unwrap(), "p\nq\nr\n");

    let missing = write(dir.path(), "m.csv", "x,?\ny,z\n");
    assert_eq!(cliquepart(&["reduce", "abr", &missing]).status.code(), Some(2));

    let ret = write(dir.path(), "r.csv", "t,A,B\n1,1,1\n2,1,2\n3,1,3\n");
    assert_eq!(cliquepart(&["reduce", "portfolio", &ret]).status.code(), Some(2));
}

#[test]
fn bench_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "t.txt", TRIANGLE);
    let m = write(dir.path(), "m.json", r#"[{"path":"t.txt","optimum":3},{"path":"missing.txt"}]"#);
    let csv = dir.path().join("out.csv");
    let js = dir.path().join("out.json");
    let out = cliquepart(&["bench", &m, "--csv", csv.to_str().unwrap(), "--json", js.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(&js).unwrap()).unwrap();
    assert_eq!(recs.len(), 6);
    assert_eq!(recs[0]["eos"], 0.0);
    assert_eq!(recs[5]["status"], "Failed");
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 7);

    let empty = write(dir.path(), "e.json", "[]");
    assert!(cliquepart(&["bench", &empty]).status.success());
}
