use std::path::Path;
use std::process::{Command, Output};

use hicomp::samples::io::to_json;
use hicomp::samples::{draw_sample, Hypothesis, Interval, LabeledSample, ProductMeasure};
use hicomp::Mode;
use serde_json::Value;

fn hicomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hicomp")).args(args).output().unwrap()
}

fn config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const RECT: &str = "mode = partite\nk = 2\nscheme = rectangle\nclass = rectangle\n";

#[test]
fn mpac_reports_the_minimal_size_with_its_breakdown() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "m.cfg", &format!("{RECT}epsilon = 0.1\ndelta = 0.1\n"));
    let out = hicomp(&["mpac", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["m_pac"], 16852);
    assert!(v[0]["breakdown"]["total"].as_f64().unwrap() <= 0.1);
}

#[test]
fn broken_scheme_fails_fast_with_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "b.cfg",
        "mode = partite\nk = 2\nscheme = constant-zero\nclass = rectangle\nm_values = 5, 10\ntrials = 50\nseed = 4\n",
    );
    let out = hicomp(&["validate-scheme", "--config", &cfg, "--fail-fast"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("1 violation(s)") && err.contains("witness"), "{err}");
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "x.cfg", &format!("{RECT}colour = blue\n"));
    let out = hicomp(&["pac", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
    assert_eq!(hicomp(&["pac", "--config", "/nonexistent.cfg"]).status.code(), Some(2));
    assert_eq!(hicomp(&["pac"]).status.code(), Some(2));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "p.cfg", &format!("{RECT}m_values = 30, 60\ntrials = 40\nseed = 1\n"));
    let run = |sub: &str, seed: &str| {
        let out = dir.path().join(sub);
        let status = hicomp(&["pac", "--config", &cfg, "--seed", seed, "--out", out.to_str().unwrap()]).status;
        assert_eq!(status.code(), Some(0));
        ["trials.jsonl", "summary.csv", "manifest.json"].map(|f| std::fs::read(out.join(f)).unwrap())
    };
    let (a, b, c) = (run("a", "7"), run("b", "7"), run("c", "8"));
    assert_eq!(a, b);
    assert_ne!(a[0], c[0]);
    let manifest: Value = serde_json::from_slice(&a[2]).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["files"].as_array().unwrap().len(), 2);
}

#[test]
fn inspect_prints_dimensions_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let mu = ProductMeasure::uniform(Mode::Partite, 2).unwrap();
    let f = Hypothesis::rectangle(vec![Interval::new(0.0, 0.5), Interval::new(0.0, 1.0)]);
    let sample = LabeledSample::induced(draw_sample(&mu, 6, 3), f).unwrap();
    let path = dir.path().join("s.json");
    std::fs::write(&path, to_json(&sample).unwrap()).unwrap();
    let out = hicomp(&["inspect", "--sample", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["m"], 6);
    assert_eq!(v["cells"], 36);
    assert_eq!(v["labelled"], 36);
    let counts: u64 = v["histogram"].as_object().unwrap().values().map(|n| n.as_u64().unwrap()).sum();
    assert_eq!(counts, 36);
}

#[test]
fn bound_table_is_csv_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "t.cfg", &format!("{RECT}m_values = 1000, 20000\n"));
    let out = hicomp(&["bound-table", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("mode,k,m,epsilon"));
    assert_eq!(text.lines().count(), 3);
}
