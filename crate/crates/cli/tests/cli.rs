use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use herdsim_cli::{parse_config, parse_config_json};
use herdsim_core::graph_file::read_graph;
use herdsim_core::graph::is_irreducible;
use serde_json::Value;

fn herdsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_herdsim"))
        .args(args)
        .env_remove("HERDSIM_THREADS")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, body).unwrap();
    p
}

const CONSENSUS: &str = r#"
[graph]
model = "er:12:0.4"
seed = 3

[dynamics]
rule = "consensus"
alpha = 0.4

[init]
mode = "constant"
p0 = 0.6

[run]
trials = 40
master_seed = 11
"#;

const HK4: &str = r#"
[graph]
matrix = [[0, 1, 0, 0], [0.5, 0, 0.25, 0.25], [0.25, 0.25, 0, 0.5], [0, 0, 1, 0]]

[dynamics]
rule = "bounded_confidence"
alpha = 0.3
tau = 0.25

[init]
mode = "explicit"
values = [0, 0.45, 0.55, 1]

[run]
trials = 1
max_steps = 2000
sample_every = 10
"#;

fn read_csv(p: &Path) -> Vec<Vec<String>> {
    csv::Reader::from_path(p)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn header(p: &Path) -> String {
    fs::read_to_string(p).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn run_writes_one_row_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSENSUS);
    let out = dir.path().join("out");
    let o = herdsim(&["run", "-c", path(&cfg), "-o", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    assert_eq!(header(&out.join("trials.csv")), "trial_id,seed,class,steps,q0,q_final");
    let rows = read_csv(&out.join("trials.csv"));
    assert_eq!(rows.len(), 40);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], i.to_string());
        assert!(row[2] == "herd0" || row[2] == "herd1", "{row:?}");
    }

    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["trials"], 40);
    assert_eq!(summary["config_digest"].as_str().unwrap().len(), 64);
    assert_eq!(summary["polarized"], 0);

    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for name in &outputs {
        assert!(out.join(name).exists(), "{name}");
    }
    assert!(outputs.contains(&"trials.csv") && outputs.contains(&"summary.json"));
    assert_eq!(manifest["master_seed"], 11);
    assert!(manifest["started_at"].is_string() && manifest["finished_at"].is_string());
    assert_eq!(parse_config_json(&manifest["config"]).unwrap(), parse_config(&cfg).unwrap());
}

#[test]
fn rerun_is_identical_except_timestamps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSENSUS);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(herdsim(&["run", "-c", path(&cfg), "-o", path(&a), "--threads", "1"]).status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_herdsim"))
        .args(["run", "-c", path(&cfg), "-o", path(&b), "--threads", "1"])
        .env("HERDSIM_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    for f in ["trials.csv", "summary.json", "trajectory.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let strip = |p: &Path| {
        let mut m: Value = serde_json::from_str(&fs::read_to_string(p.join("manifest.json")).unwrap()).unwrap();
        m["started_at"] = Value::Null;
        m["finished_at"] = Value::Null;
        m
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSENSUS);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(herdsim(&["run", "-c", path(&cfg), "-o", path(&a)]).status.success());
    assert!(herdsim(&["run", "-c", path(&cfg), "-o", path(&b), "--seed", "12"]).status.success());
    assert_ne!(fs::read(a.join("trials.csv")).unwrap(), fs::read(b.join("trials.csv")).unwrap());
    let manifest: Value = serde_json::from_str(&fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 12);
    assert_eq!(manifest["config"]["run"]["master_seed"], 12);
}

#[test]
fn hk4_trajectory_stays_confined() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), HK4);
    let out = dir.path().join("out");
    let o = herdsim(&["run", "-c", path(&cfg), "-o", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&out.join("trajectory.csv")), "trial_id,t,agent,x");
    let rows = read_csv(&out.join("trajectory.csv"));
    // t = 0, 10, ..., 2000
    assert_eq!(rows.len(), 201 * 4);
    for row in rows {
        let x: f64 = row[3].parse().unwrap();
        match row[2].as_str() {
            "0" => assert_eq!(x, 0.0),
            "1" => assert!(x > 0.25 && x < 0.5, "{x}"),
            "2" => assert!(x > 0.5 && x < 0.75, "{x}"),
            _ => assert_eq!(x, 1.0),
        }
    }
    let trials = read_csv(&out.join("trials.csv"));
    assert_eq!(trials[0][2], "unresolved");
}

#[test]
fn sweep_echoes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONSENSUS.replace("trials = 40", "trials = 20"));
    let out = dir.path().join("sweep");
    let o = herdsim(&["sweep", "-c", path(&cfg), "-o", path(&out), "--p0", "0.2:0.8:0.1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&out.join("sweep.csv")), "p0,mean_final,var_final,herd1_freq,ci");
    let rows = read_csv(&out.join("sweep.csv"));
    let p0: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(p0, vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]);
}

#[test]
fn diagnose_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONSENSUS.replace("er:12:0.4", "er:6:0.6"));
    let out = dir.path().join("diag");
    let o = herdsim(&["diagnose", "-c", path(&cfg), "-o", path(&out), "--oracle", "--samples", "20000", "--oracle-samples", "20000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let drift = read_csv(&out.join("drift.csv"));
    assert_eq!(drift.len(), 6);
    // x = 0 is a fixed point
    assert_eq!(drift[0][3].parse::<f64>().unwrap(), 0.0);
    for row in &drift {
        assert!(row[5].parse::<f64>().unwrap() < 5.0, "{row:?}");
    }
    for row in read_csv(&out.join("variance.csv")) {
        let analytic: f64 = row[2].parse().unwrap();
        let enumerated: f64 = row[3].parse().unwrap();
        assert!((analytic - enumerated).abs() <= 1e-12, "{row:?}");
        if row[0] == "0" {
            assert_eq!(analytic, 0.0);
        }
    }
    for row in read_csv(&out.join("oracle.csv")) {
        assert_eq!(row[5], "0");
        assert!(row[4].parse::<f64>().unwrap() > 1e-4, "{row:?}");
    }
}

#[test]
fn diagnose_oracle_too_large() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONSENSUS.replace("er:12:0.4", "er:13:0.4"));
    let o = herdsim(&["diagnose", "-c", path(&cfg), "-o", path(&dir.path().join("d")), "--oracle"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn gen_graph_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for p in [&a, &b] {
        assert!(herdsim(&["gen-graph", "--model", "er:20:0.3", "--seed", "9", "-o", path(p)]).status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(is_irreducible(&read_graph(&a).unwrap()));

    let c = dir.path().join("k4.txt");
    assert!(herdsim(&["gen-graph", "--model", "complete:4", "-o", path(&c)]).status.success());
    let text = fs::read_to_string(&c).unwrap();
    assert_eq!(text.lines().next(), Some("herdsim-graph v1 4 undirected"));
    assert_eq!(text.lines().count(), 1 + 6);
}

#[test]
fn graph_file_config_resolves_relative_path() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    assert!(herdsim(&["gen-graph", "--model", "ring:8:1", "-o", path(&g)]).status.success());
    let cfg = write_config(dir.path(), &CONSENSUS.replace("model = \"er:12:0.4\"\nseed = 3", "file = \"g.txt\""));
    let out = dir.path().join("out");
    let o = herdsim(&["run", "-c", path(&cfg), "-o", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad_tau = write_config(dir.path(), &HK4.replace("tau = 0.25", "tau = 1.5"));
    let o = herdsim(&["run", "-c", path(&bad_tau), "-o", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dynamics.tau"));

    let unknown = write_config(dir.path(), &format!("{CONSENSUS}\n[output]\nformat = \"csv\"\n"));
    assert_eq!(herdsim(&["run", "-c", path(&unknown), "-o", path(&out)]).status.code(), Some(2));

    let missing = dir.path().join("nope.toml");
    assert_eq!(herdsim(&["run", "-c", path(&missing), "-o", path(&out)]).status.code(), Some(2));

    let cfg = write_config(dir.path(), CONSENSUS);
    let o = Command::new(env!("CARGO_BIN_EXE_herdsim"))
        .args(["run", "-c", path(&cfg), "-o", path(&out)])
        .env("HERDSIM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));

    assert_eq!(herdsim(&["gen-graph", "--model", "star:5", "-o", path(&dir.path().join("g"))]).status.code(), Some(2));
    assert_eq!(herdsim(&["bogus"]).status.code(), Some(2));
}
