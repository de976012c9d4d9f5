use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use biaslin::cli::{frontier_csv, parse_frontier_csv};
use serde_json::Value;
use tempfile::TempDir;

fn biaslin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biaslin")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}, stderr: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_dist(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut full = vec!["dist", "make", "--out", path.to_str().unwrap()];
    full.extend_from_slice(args);
    stdout(&biaslin(&full));
    path
}

fn csv_roundtrip(text: &str) -> String {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(r.headers().unwrap()).unwrap();
    for rec in r.records() {
        w.write_record(&rec.unwrap()).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

#[test]
fn make_writes_exact_tables() {
    let v: Value = serde_json::from_str(&stdout(&biaslin(&["dist", "make", "--family", "case", "--k", "4", "--p", "2/5"]))).unwrap();
    assert_eq!(v["q"], serde_json::json!(["6/25", "3/25", "1/25"]));
    assert_eq!(v["probs"]["1111"], "1/25");
    assert_eq!(v["probs"].as_object().unwrap().len(), 8);
}

#[test]
fn check_reports_structure() {
    let dir = TempDir::new().unwrap();
    let d = write_dist(dir.path(), "dfh.json", &["--family", "dfh19", "--p", "2/5"]);
    let out = stdout(&biaslin(&["dist", "check", d.to_str().unwrap(), "--format", "json"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["eta"], "3/5");
    assert_eq!(v["total"], "1/1");
    assert_eq!(v["pairwise_independent"], serde_json::json!([]));
}

#[test]
fn floating_bias_is_a_validation_error() {
    let o = biaslin(&["dist", "make", "--family", "case", "--k", "4", "--p", "0.4", "--error-json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(v["validation"], true);
    assert!(o.stdout.is_empty());
}

#[test]
fn out_of_band_bias_names_the_interval() {
    let o = biaslin(&["dist", "make", "--family", "case", "--k", "4", "--p", "1/4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("admissible"));
}

#[test]
fn boundary_perturbation_fails() {
    let dir = TempDir::new().unwrap();
    let d = write_dist(dir.path(), "c.json", &["--family", "case", "--k", "4", "--p", "1/3"]);
    let o = biaslin(&["dist", "perturb", d.to_str().unwrap(), "--error-json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(v["error"], "boundary-infeasible");
}

#[test]
fn unknown_subcommand_and_help() {
    assert_eq!(biaslin(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(biaslin(&["--help"]).status.code(), Some(0));
}

#[test]
fn frontier_csv_is_stable_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        stdout(&biaslin(&["feasibility", "scan", "--k-max", "8", "--out", path.to_str().unwrap()]));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let rows = parse_frontier_csv(&text).unwrap();
    assert_eq!(rows.len(), 7 * 19);
    assert!(rows.iter().all(|r| r.feasible == r.bound_check));
    assert_eq!(frontier_csv(&rows).unwrap(), text);
    assert_eq!(csv_roundtrip(&text), text);
}

#[test]
fn spectrum_and_report_csv_round_trip() {
    let dir = TempDir::new().unwrap();
    let spec = stdout(&biaslin(&["fourier", "spectrum", "--fn", "random:3", "--n", "5", "--p", "1/3"]));
    assert_eq!(spec.lines().count(), 33);
    assert_eq!(csv_roundtrip(&spec), spec);
    let d = write_dist(dir.path(), "u.json", &["--family", "uniform", "--k", "3"]);
    let rep = stdout(&biaslin(&["test", "run", "--fn", "random:7", "--n", "6", "--dist", d.to_str().unwrap(), "--format", "csv"]));
    assert_eq!(csv_roundtrip(&rep), rep);
}

#[test]
fn characters_pass_and_negated_variant() {
    let dir = TempDir::new().unwrap();
    let d = write_dist(dir.path(), "c.json", &["--family", "case", "--k", "5", "--p", "3/4"]);
    let d = d.to_str().unwrap();
    let v: Value = serde_json::from_str(&stdout(&biaslin(&["test", "run", "--fn", "chi:1,3", "--n", "3", "--dist", d]))).unwrap();
    assert_eq!(v["expectation"], 1.0);
    assert_eq!(v["mode"], "exact");
    assert_eq!(v["acceptance"], 1.0);
    let v: Value =
        serde_json::from_str(&stdout(&biaslin(&["test", "run", "--fn", "neg-chi:0b100", "--dist", d, "--negated"]))).unwrap();
    assert_eq!(v["expectation"], 1.0);
}

#[test]
fn mc_test_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let d = write_dist(dir.path(), "c.json", &["--family", "case", "--k", "4", "--p", "2/5"]);
    let args = ["test", "run", "--fn", "random:5", "--n", "10", "--dist", d.to_str().unwrap(), "--mc", "--samples", "5000", "--seed", "9"];
    let first = stdout(&biaslin(&args));
    assert_eq!(first, stdout(&biaslin(&args)));
    let mut threaded = args.to_vec();
    threaded.extend_from_slice(&["--threads", "3"]);
    assert_eq!(first, stdout(&biaslin(&threaded)));
    let v: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["mode"], "monte-carlo");
    assert_eq!(v["samples"], 5000);
}

#[test]
fn hermite_moments() {
    assert_eq!(stdout(&biaslin(&["hermite", "moment", "--s", "1,1", "--rho", "1/6"])), "1/6\n");
    assert_eq!(stdout(&biaslin(&["hermite", "moment", "--s", "2,2", "--rho", "-1/3"])), "2/9\n");
    assert_eq!(stdout(&biaslin(&["hermite", "moment", "--s", "2,1", "--rho", "1/2"])), "0/1\n");
}

#[test]
fn config_file_supplies_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"s": "1,1", "rho": "1/5"}"#).unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(stdout(&biaslin(&["hermite", "moment", "--config", c])), "1/5\n");
    assert_eq!(stdout(&biaslin(&["hermite", "moment", "--config", c, "--rho", "1/3"])), "1/3\n");
}

#[test]
fn witness_build_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let d = write_dist(dir.path(), "dfh.json", &["--family", "dfh19", "--p", "2/5"]);
    let run = |tag: &str| {
        let w = dir.path().join(format!("w{tag}.json"));
        let r = dir.path().join(format!("r{tag}.json"));
        let o = biaslin(&[
            "witness", "build", "--dist", d.to_str().unwrap(), "--n", "300", "--samples", "20000", "--seed", "3",
            "--pairs", "20", "--out", w.to_str().unwrap(), "--report", r.to_str().unwrap(),
        ]);
        assert!(matches!(o.status.code(), Some(0 | 2)), "stderr: {}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read_to_string(w).unwrap(), std::fs::read_to_string(r).unwrap())
    };
    let (w1, r1) = run("1");
    let (w2, r2) = run("2");
    assert_eq!(w1, w2);
    assert_eq!(r1, r2);
    let w: Value = serde_json::from_str(&w1).unwrap();
    assert!(w["s"].as_array().unwrap().iter().all(|s| s.as_u64().unwrap() >= 1));
    let r: Value = serde_json::from_str(&r1).unwrap();
    assert_eq!(r["probes"], 300 + 20 + 1);
}

#[test]
fn witness_refuses_pairwise_independent_input() {
    let dir = TempDir::new().unwrap();
    let d = write_dist(dir.path(), "c.json", &["--family", "case", "--k", "4", "--p", "2/5"]);
    let o = biaslin(&["witness", "build", "--dist", d.to_str().unwrap(), "--error-json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(v["error"], "pairwise-independent");
}
