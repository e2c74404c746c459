use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn groupmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groupmatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn simulate(dir: &Path) {
    let spec = dir.join("spec.json");
    fs::write(
        &spec,
        r#"{"n_items": 60, "n_intruders": 6, "n_covariates": 2, "n_shifted_covariates": 1, "seed": 3}"#,
    )
    .unwrap();
    let out = groupmatch(&[
        "simulate",
        "--config",
        spec.to_str().unwrap(),
        "--output-dir",
        dir.join("sim").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
}

fn run_config(dir: &Path, alpha: f64) -> String {
    let cfg = dir.join(format!("run_{alpha}.json"));
    fs::write(
        &cfg,
        format!(
            r#"{{
  "dataset": {{"path": "sim/dataset.csv", "id_column": "id", "group_column": "group",
               "covariates": ["x1", "x2"], "truth": "sim/truth.csv"}},
  "criteria": [
    {{"test": "welch_t", "covariate": "x1", "groups": ["A", "B"], "alpha": {alpha}}},
    {{"test": "welch_t", "covariate": "x2", "groups": ["A", "B"], "alpha": 0.2}},
    {{"test": "anderson_darling", "covariate": "x1", "groups": ["A", "B"], "alpha": 0.2}}
  ],
  "seed": 4,
  "algorithms": [{{"name": "greedy"}}, {{"name": "lookahead", "variant": "h3", "lookahead": 1}}],
  "output_dir": "match"
}}"#
        ),
    )
    .unwrap();
    cfg.to_str().unwrap().to_owned()
}

#[test]
fn simulate_writes_dataset_truth_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let sim = dir.path().join("sim");
    let data = fs::read_to_string(sim.join("dataset.csv")).unwrap();
    assert!(data.starts_with("id,group,x1,x2\n"));
    assert_eq!(data.lines().count(), 61);
    let truth = fs::read_to_string(sim.join("truth.csv")).unwrap();
    assert_eq!(truth.lines().filter(|l| l.ends_with(",1")).count(), 6);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(sim.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 3);
}

#[test]
fn simulate_rejects_too_many_intruders() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"n_items": 20, "n_intruders": 20, "n_covariates": 2, "n_shifted_covariates": 1, "seed": 1}"#,
    )
    .unwrap();
    let out = groupmatch(&["simulate", "--config", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("n_intruders"), "{}", text(&out.stderr));
}

#[test]
fn match_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let cfg = run_config(dir.path(), 0.2);
    let out = groupmatch(&["match", "--config", &cfg]);
    let code = out.status.code().unwrap();
    assert!(code == 0 || code == 2, "{}", text(&out.stderr));
    let m = dir.path().join("match");
    for f in ["solutions.txt", "metrics.csv", "trace.jsonl", "manifest.json"] {
        assert!(m.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(m.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "match");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["dataset_sha256"].as_str().unwrap().len(), 64);
    let metrics = fs::read_to_string(m.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3);
    let trace = fs::read_to_string(m.join("trace.jsonl")).unwrap();
    for line in trace.lines() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(rec["removed"].is_string());
    }
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let cfg = run_config(dir.path(), 0.2);
    let mut solutions = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = dir.path().join(format!("t{threads}"));
        let out = groupmatch(&[
            "match",
            "--config",
            &cfg,
            "--seed",
            "17",
            "--threads",
            threads,
            "--budget",
            "100000000",
            "--algorithms",
            "greedy,h4:2",
            "--output-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.code().unwrap() != 1, "{}", text(&out.stderr));
        let stdout = text(&out.stdout);
        assert!(stdout.contains("h4(L=2)"), "{stdout}");
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest["seed"], 17);
        solutions.push(fs::read(out_dir.join("solutions.txt")).unwrap());
    }
    assert_eq!(solutions[0], solutions[1]);
}

#[test]
fn bad_alpha_names_the_criterion() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let cfg = run_config(dir.path(), 1.5);
    let out = groupmatch(&["match", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = text(&out.stderr);
    assert!(err.contains("criterion 0") && err.contains("x1") && err.contains("alpha"), "{err}");
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let cfg = run_config(dir.path(), 0.2);
    let body = fs::read_to_string(&cfg).unwrap().replace("\"seed\"", "\"sead\"");
    fs::write(&cfg, body).unwrap();
    let out = groupmatch(&["match", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("sead"));
}

#[test]
fn estimate_prints_projection() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let cfg = run_config(dir.path(), 0.2);
    let out = groupmatch(&["estimate", "--config", &cfg, "--bound", "3", "--rate", "1000"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    // C(60,0)+...+C(60,3) = 1 + 60 + 1770 + 34220
    assert!(stdout.contains("36051 configurations"), "{stdout}");
    assert!(stdout.contains("< 37 seconds"), "{stdout}");

    let out = groupmatch(&["estimate", "--config", &cfg, "--rate", "1000"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("greedy removed"));
}

#[test]
fn evaluate_runs_a_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.json");
    fs::write(
        &cfg,
        r#"{
  "grid": [
    {"n_items": 40, "n_intruders": 4, "n_covariates": 2, "n_shifted_covariates": 1, "seed": 1},
    {"n_items": 40, "n_intruders": 4, "n_covariates": 2, "n_shifted_covariates": 2, "seed": 2}
  ],
  "replications": 2,
  "algorithms": [{"name": "greedy"}],
  "seed": 8,
  "output_dir": "grid"
}"#,
    )
    .unwrap();
    let out = groupmatch(&[
        "evaluate",
        "--config",
        cfg.to_str().unwrap(),
        "--algorithms",
        "greedy,random:10",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let g = dir.path().join("grid");
    let runs = fs::read_to_string(g.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2 * 2 * 2);
    let summary = fs::read_to_string(g.join("summary.txt")).unwrap();
    assert!(summary.contains("greedy") && summary.contains("random(I=10)"));
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(groupmatch(&["--help"]).status.code(), Some(0));
    assert_eq!(groupmatch(&["match"]).status.code(), Some(1));
    assert_eq!(groupmatch(&["frobnicate"]).status.code(), Some(1));
    let out = groupmatch(&["match", "--config", "/nonexistent/run.json"]);
    assert_eq!(out.status.code(), Some(1));
}
