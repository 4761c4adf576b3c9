use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fw_core::solver::{meta_path, read_csv, RunTrace, CSV_HEADER};
use serde_json::Value;
use tempfile::TempDir;

fn fw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fw")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config(rule: &str, iters: usize, prestart: bool, extra: &str) -> String {
    format!(
        r#"{{
  "schema": 1,
  "problem": {{"kind": "quadratic_simplex", "n": 12, "spectrum": {{"kind": "random", "lo": 0.1, "hi": 2.0}},
              "linear": {{"kind": "random", "scale": 0.5}}, "seed": 7}},
  "rule": {rule},
  "iters": {iters},
  "prestart": {prestart},
  "start": {{"kind": "vertex", "index": 0}}{extra}
}}"#
    )
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_ok(cfg: &Path) -> PathBuf {
    let o = fw(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    cfg.with_file_name(format!("{}.trace.csv", cfg.file_stem().unwrap().to_string_lossy()))
}

#[test]
fn run_writes_trace_and_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "std.json", &config(r#"{"kind": "standard"}"#, 50, true, ""));
    let trace = run_ok(&cfg);
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(lines.count(), 51);
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("std.summary.json")).unwrap()).unwrap();
    for key in ["status", "iterations", "final_gap", "final_fwgap", "best_bound", "curvature_used", "doublings"] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
    assert_eq!(summary["status"], "max_iters");
    assert_eq!(summary["iterations"], 50);
    assert!(meta_path(&trace).exists());
}

#[test]
fn zero_iterations_with_prestart_is_one_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "zero.json", &config(r#"{"kind": "standard"}"#, 0, true, ""));
    let rows = read_csv(fs::File::open(run_ok(&cfg)).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].k, 0);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let extra = r#",
  "inexactness": {"gradient": {"kind": "delta_oracle", "delta": 0.05}, "seed": 11}"#;
    let a = write(dir.path(), "a.json", &config(r#"{"kind": "averaging"}"#, 200, false, extra));
    let b = write(dir.path(), "b.json", &config(r#"{"kind": "averaging"}"#, 200, false, extra));
    assert_eq!(fs::read(run_ok(&a)).unwrap(), fs::read(run_ok(&b)).unwrap());
}

#[test]
fn csv_values_round_trip_exactly() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "ls.json", &config(r#"{"kind": "line_search"}"#, 80, true, ""));
    let trace = run_ok(&cfg);
    let loaded = RunTrace::load(&trace, meta_path(&trace)).unwrap();
    let mut again = Vec::new();
    loaded.write_csv(&mut again).unwrap();
    assert_eq!(again, fs::read(&trace).unwrap());
}

#[test]
fn check_passes_on_a_valid_trace() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "std.json", &config(r#"{"kind": "standard"}"#, 300, true, ""));
    let trace = run_ok(&cfg);
    let t = trace.to_str().unwrap();
    let o = fw(&["check", t, "--bounds", "thm21,bound31"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: Value = serde_json::from_str(&fs::read_to_string(trace.with_extension("check.json")).unwrap()).unwrap();
    assert!(report["first_violation"].is_null());
    for mode in ["lipschitz", "sampled"] {
        let o = fw(&["check", t, "--curvature", mode, "--samples", "200"]);
        assert_eq!(code(&o), 0, "{mode}: {}", stderr(&o));
    }
}

#[test]
fn corrupted_trace_is_a_violation_at_the_first_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "std.json", &config(r#"{"kind": "standard"}"#, 40, false, ""));
    let trace = run_ok(&cfg);
    let mut loaded = RunTrace::load(&trace, meta_path(&trace)).unwrap();
    for r in &mut loaded.records {
        r.h += 1.0;
    }
    loaded.meta.final_h += 1.0;
    loaded.save(&trace).unwrap();
    let o = fw(&["check", trace.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("at k=1"), "{}", stderr(&o));
}

#[test]
fn mismatched_bound_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "std.json", &config(r#"{"kind": "standard"}"#, 10, true, ""));
    let trace = run_ok(&cfg);
    let o = fw(&["check", trace.to_str().unwrap(), "--bounds", "thm53"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("thm53"));
    let o = fw(&["check", trace.to_str().unwrap(), "--bounds", "nonsense"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn malformed_config_reports_line_and_field() {
    let dir = TempDir::new().unwrap();
    let text = config(r#"{"kind": "standard"}"#, 10, true, ",\n  \"prestrat\": true");
    let cfg = write(dir.path(), "bad.json", &text);
    let o = fw(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("bad.json:9:") && err.contains("prestrat"), "{err}");
    let o = fw(&["run", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let o = fw(&["frobnicate"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn runtime_failure_exits_two() {
    let dir = TempDir::new().unwrap();
    fs::create_dir(dir.path().join("occupied")).unwrap();
    let extra = r#",
  "output": {"trace": "occupied"}"#;
    let cfg = write(dir.path(), "io.json", &config(r#"{"kind": "standard"}"#, 5, true, extra));
    let o = fw(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

fn sweep_dir(rules: &[(&str, &str)]) -> TempDir {
    let dir = TempDir::new().unwrap();
    for (name, rule) in rules {
        write(dir.path(), &format!("{name}.json"), &config(rule, 120, true, ""));
    }
    dir
}

const FOUR_RULES: [(&str, &str); 4] = [
    ("a_standard", r#"{"kind": "standard"}"#),
    ("b_averaging", r#"{"kind": "averaging"}"#),
    ("c_constant", r#"{"kind": "optimized_constant", "k_total": 50}"#),
    ("d_dynamic", r#"{"kind": "dynamic", "c0": 0.05}"#),
];

#[test]
fn sweep_fans_out_and_is_deterministic() {
    let dir = sweep_dir(&FOUR_RULES);
    let d = dir.path().to_str().unwrap();
    let one = dir.path().join("one");
    let four = dir.path().join("four");
    let o = fw(&["sweep", d, "-j", "1", "--out", one.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let o = fw(&["sweep", d, "-j", "4", "--out", four.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let summary = fs::read_to_string(one.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
    // the dynamic rule may stop early once the gap closes
    assert!(summary.lines().skip(1).all(|l| l.contains(",0,")), "{summary}");
    let traces = fs::read_dir(&one).unwrap().filter(|e| e.as_ref().unwrap().path().extension().unwrap() == "csv").count();
    assert_eq!(traces, 5);
    let mut names: Vec<_> = fs::read_dir(&one).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for n in names {
        assert_eq!(fs::read(one.join(&n)).unwrap(), fs::read(four.join(&n)).unwrap(), "{n:?} differs");
    }
}

#[test]
fn empty_sweep_writes_only_the_header() {
    let dir = TempDir::new().unwrap();
    let o = fw(&["sweep", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let summary = fs::read_to_string(dir.path().join("sweep").join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1);
    assert!(summary.starts_with("name,problem,rule,status"));
}

#[test]
fn sweep_reports_failing_children() {
    let dir = sweep_dir(&FOUR_RULES[..2]);
    write(dir.path(), "z_broken.json", "{\"schema\": 1,");
    let o = fw(&["sweep", dir.path().to_str().unwrap(), "-j", "2"]);
    assert_eq!(code(&o), 1);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("z_broken") && stdout.contains("config_error"), "{stdout}");
    let summary = fs::read_to_string(dir.path().join("sweep").join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
}
