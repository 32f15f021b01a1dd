use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hypercrit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypercrit"))
        .args(args)
        .env_remove("HYPERCRIT_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_chain(dir: &Path) -> String {
    let path = dir.join("chain.txt");
    fs::write(&path, "N=3\n0 1\n1 2\n").unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn walk_on_chain_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_chain(dir.path());
    let csv = stdout(&hypercrit(&["walk", "--input", &input, "--root-policy", "lowest-index", "--format", "csv"]));
    let children: Vec<&str> = csv.lines().skip(2).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(children, ["1", "1", "0"]);
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = hypercrit(&[
            "sweep", "--n", "200,400", "--beta", "0.5,0.1", "--trials", "20", "--seed", "9", "--delta", "0.3",
            "--out", out.to_str().unwrap(),
        ]);
        assert!(status.status.success());
        fs::read(out).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn env_seed_overrides_flag() {
    let args = ["sample-walk", "--n", "300", "--beta", "0.6", "--format", "csv"];
    let with_env = |seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_hypercrit"))
            .args(args)
            .args(["--seed", "1"])
            .env("HYPERCRIT_SEED", seed)
            .output()
            .unwrap();
        stdout(&out)
    };
    let flag = |seed: &str| stdout(&hypercrit(&[&args[..], &["--seed", seed]].concat()));
    assert_eq!(with_env("7"), flag("7"));
    assert_ne!(flag("7"), flag("1"));
}

#[test]
fn sweep_reports_exponent() {
    let out = stdout(&hypercrit(&[
        "sweep", "--n", "1000,10000,100000", "--critical-k", "3", "--beta-k", "0.1", "--trials", "10",
    ]));
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["config"]["seed"], 0);
    assert!(report["result"]["exponent"]["slope"].is_f64());
    assert_eq!(report["result"]["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn generate_then_collapse_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    let g = graph.to_str().unwrap();
    assert!(hypercrit(&["generate", "--n", "500", "--beta", "0.7,0.2", "--seed", "4", "--out", g]).status.success());
    let text = fs::read_to_string(&graph).unwrap();
    assert!(text.starts_with("N=500\n"));
    let report: serde_json::Value =
        serde_json::from_str(&stdout(&hypercrit(&["collapse", "--input", g, "--vertex", "0"]))).unwrap();
    let domain = report["result"]["domain"].as_array().unwrap();
    assert_eq!(report["result"]["size"].as_u64().unwrap() as usize, domain.len());
    let rows = stdout(&hypercrit(&["collapse", "--input", g, "--delta", "0.5", "--trials", "5", "--format", "csv"]));
    assert_eq!(rows.lines().count(), 6);
    let trace = stdout(&hypercrit(&["walk", "--input", g, "--format", "csv"]));
    assert_eq!(trace.lines().count(), 502);
}

#[test]
fn exit_codes() {
    assert_eq!(hypercrit(&["sweep", "--beta", "0.5"]).status.code(), Some(2));
    assert_eq!(hypercrit(&["analyze", "--beta", "0.5,x"]).status.code(), Some(2));
    assert_eq!(hypercrit(&["sweep", "--n", "10", "--beta", "0.5", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(hypercrit(&["walk", "--input", "/no/such/file"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "N=3\n0 9\n").unwrap();
    assert_eq!(hypercrit(&["walk", "--input", bad.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(hypercrit(&["limits", "--beta", "0.3"]).status.code(), Some(2));
}

#[test]
fn streaming_walk_lists_excursions() {
    let csv = stdout(&hypercrit(&["sample-walk", "--n", "1000", "--beta", "0.4", "--streaming", "--format", "csv"]));
    let total: usize = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 1000);
}
