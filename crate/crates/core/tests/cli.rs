use std::path::Path;
use std::process::{Command, Output};

use halfspace_lab::format::{read_examples, read_sidecar, DataReader, FileKind};
use halfspace_lab::metrics::empirical_agreement;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halfspace-lab")).args(args).output().expect("spawn")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(path: &Path, extra: &[&str]) {
    let mut args = vec!["gen", "--d", "8", "--m", "40000", "--sigma", "0.005", "--period", "0.1", "--out", s(path)];
    args.extend_from_slice(extra);
    let out = lab(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_reduce_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.bin");
    gen(&raw, &["--seed", "11", "--store-secret"]);
    let side = read_sidecar(&raw).unwrap();
    assert_eq!(side.m, 40000);
    assert!(!side.binarized);
    let secret = side.secret.clone().unwrap();

    // Reduce into a new path: the input stays a sample file.
    let ex = dir.path().join("ex.bin");
    assert!(lab(&["reduce", "--input", s(&raw), "--out", s(&ex)]).status.success());
    assert_eq!(DataReader::open(&raw).unwrap().header.kind, FileKind::Samples);
    assert_eq!(DataReader::open(&ex).unwrap().header.kind, FileKind::Examples);
    assert!(read_sidecar(&ex).unwrap().binarized);

    let out = lab(&["eval", "--input", s(&ex), "--u", "secret", "--metric", "agreement", "--metric", "band", "--k", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["metric"], "agreement");
    assert_eq!(lines[1]["metric"], "band");
    assert_eq!(lines[1]["k"], 1);

    let (_, examples) = read_examples(&ex).unwrap();
    let direct = empirical_agreement(&examples, &secret, 0.95).unwrap();
    assert_eq!(lines[0]["value"].as_f64().unwrap(), direct.value);
    assert_eq!(lines[0]["n"], 40000);

    // Raw samples evaluate to the same numbers.
    let out_raw = lab(&["eval", "--input", s(&raw), "--u", "secret", "--metric", "agreement", "--metric", "band", "--k", "1"]);
    assert_eq!(String::from_utf8(out_raw.stdout).unwrap(), text);
}

#[test]
fn reduce_in_place_replaces_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.bin");
    gen(&raw, &["--hypothesis", "null"]);
    let before = read_examples(&raw).unwrap().1;
    assert!(lab(&["reduce", "--input", s(&raw)]).status.success());
    let (header, after) = read_examples(&raw).unwrap();
    assert_eq!(header.kind, FileKind::Examples);
    assert_eq!(after, before);
    assert!(!dir.path().join("raw.bin.tmp").exists());
    assert!(read_sidecar(&raw).unwrap().binarized);
}

#[test]
fn secret_is_withheld_unless_requested() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.bin");
    gen(&raw, &[]);
    assert!(read_sidecar(&raw).unwrap().secret.is_none());
    let out = lab(&["eval", "--input", s(&raw), "--u", "secret", "--metric", "agreement"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no recorded secret"));

    // An explicit direction works, and a non-unit one is refused.
    let u = dir.path().join("u.txt");
    std::fs::write(&u, "1 0 0 0 0 0 0 0\n").unwrap();
    let out = lab(&["eval", "--input", s(&raw), "--u", s(&u), "--metric", "unfairness", "--format", "csv"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("metric,k,value,halfWidth,n,confidence\n"));
    std::fs::write(&u, "[2, 0, 0, 0, 0, 0, 0, 0]").unwrap();
    assert_eq!(lab(&["eval", "--input", s(&raw), "--u", s(&u), "--metric", "agreement"]).status.code(), Some(2));
}

#[test]
fn verify_lemmas_reports_and_exit_codes() {
    let out = lab(&["verify-lemmas", "--only", "centering", "--only", "partial_gaussian_ft"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "lemma,parameters,relation,oracleValue,boundValue,errorBudget,margin,verdict"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 27 + 12);
    assert!(rows.iter().all(|r| r.ends_with(",pass")));

    let out = lab(&["verify-lemmas", "--only", "nonexistent"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_and_scan() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"d": 16, "eta": 40.0, "kappa": 1, "m": 400000, "seed": 2}"#).unwrap();
    let out = lab(&["experiment", "--config", s(&cfg), "--problem", "reliable"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 2);
    assert_eq!(arr[0]["hypothesis"], "alternative");
    assert_eq!(arr[0]["decision"], "alternative");
    assert_eq!(arr[1]["decision"], "null");

    let grid = dir.path().join("g.json");
    std::fs::write(&grid, r#"{"eta": [], "d": [16], "kappa": 1}"#).unwrap();
    let out = lab(&["experiment", "--scan", s(&grid), "--problem", "agnostic"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "eta,d,m,T,sigma,hypothesis,metric,estimate,halfWidth,bound,threshold,decision,error\n"
    );

    // A grid point breaking the period limit is reported in-row and flips the exit code.
    std::fs::write(&grid, r#"{"eta": [40.0], "d": [16], "m": [1000], "kappa": 1, "Cprime": 0.001}"#).unwrap();
    let out = lab(&["experiment", "--scan", s(&grid), "--problem", "agnostic"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("exceeds 1/pi"));

    std::fs::write(&cfg, r#"{"d": 16, "eta": 40.0, "kappa": 1, "bogus": 1}"#).unwrap();
    assert_eq!(lab(&["experiment", "--config", s(&cfg)]).status.code(), Some(2));
}
