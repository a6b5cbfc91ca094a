use std::path::Path;
use std::process::{Command, Output};

fn heis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heis-beta"))
        .args(args)
        .env_remove("HEIS_BETA_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Data rows of a CSV document as column-name → value maps.
fn rows(doc: &str) -> Vec<Vec<(String, String)>> {
    let body: String = doc.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let head: Vec<String> = r.headers().unwrap().iter().map(str::to_string).collect();
    r.records().map(|rec| head.iter().cloned().zip(rec.unwrap().iter().map(str::to_string)).collect()).collect()
}

fn col<'a>(row: &'a [(String, String)], name: &str) -> &'a str {
    &row.iter().find(|(k, _)| k == name).unwrap().1
}

const FAST_BETA: &[&str] = &["beta", "--rmin", "0.1", "--rmax", "10", "--per-decade", "2", "--no-timestamp"];

#[test]
fn defaults_are_echoed() {
    let o = heis(FAST_BETA);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = stdout(&o);
    for line in [
        "# suite: beta",
        "# config: n = 1",
        "# config: p = 2",
        "# config: seed = 42",
        "# config: field = gaussian",
        "# config: box_radius = 64",
        "# config: samples = 1024",
        "# config: x = 0,0,0",
    ] {
        assert!(doc.lines().any(|l| l == line), "missing `{line}` in\n{doc}");
    }
    assert!(!doc.contains("timestamp"));
    assert!(doc.lines().any(|l| l == "r,beta,stderr,x_id"));
    assert_eq!(rows(&doc).len(), 5);
}

#[test]
fn timestamp_present_by_default() {
    let o = heis(&FAST_BETA[..FAST_BETA.len() - 1]);
    assert!(stdout(&o).lines().any(|l| l.starts_with("# timestamp: ")));
}

#[test]
fn gate_rejects_inadmissible_exponents() {
    let o = heis(&["dorronsoro", "--p", "2", "--q", "4", "--n", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("admissible"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["beta", "--alpha", "2"][..],
        &["beta", "--p", "1"],
        &["beta", "--q", "0.5"],
        &["beta", "--field", "torus"],
        &["beta", "--param", "size=3"],
        &["beta", "--workers", "0"],
        &["beta", "--bogus"],
        &["poincare", "--p", "3"],
    ] {
        let o = heis(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(heis(&["--help"]).status.code(), Some(0));
}

#[test]
fn affine_beta_vanishes() {
    let o = heis(&[
        "beta", "--field", "affine", "--param", "a=1.5,-2", "--param", "b=0.25", "--mode", "grid", "--x", "0,0,0;1,-0.5,2",
        "--no-timestamp",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = rows(&stdout(&o));
    assert_eq!(rows.len(), 2 * 81);
    for r in &rows {
        let b: f64 = col(r, "beta").parse().unwrap();
        assert!(b <= 1e-10, "{r:?}");
    }
}

#[test]
fn squarefn_rows() {
    let o = heis(&["squarefn", "--alpha", "0.5", "--rmin", "0.01", "--rmax", "10", "--per-decade", "4", "--no-timestamp"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = stdout(&o);
    assert!(doc.lines().any(|l| l == "x_id,alpha,value,trunc_low,trunc_high,stderr,function"));
    let rows = rows(&doc);
    assert_eq!(rows.iter().map(|r| col(r, "function")).collect::<Vec<_>>(), ["G", "S"]);
    for r in &rows {
        assert!(col(r, "value").parse::<f64>().unwrap() > 0.0);
    }
}

#[test]
fn starved_identities_fail_with_exit_two() {
    let o = heis(&["identities", "--samples", "10", "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let rows = rows(&stdout(&o));
    assert!(rows.iter().any(|r| col(r, "passed") == "false"));
}

#[test]
fn default_identities_pass() {
    let o = heis(&["identities", "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(rows(&stdout(&o)).iter().all(|r| col(r, "passed") == "true"));
}

#[test]
fn output_is_independent_of_workers() {
    for suite in [&["lemmas"][..], &["poincare", "--format", "json"], &["squarefn", "--x", "0,0,0;0.5,0.5,0.1"]] {
        let run = |w: &str| {
            let mut args = suite.to_vec();
            args.extend(["--workers", w, "--no-timestamp"]);
            heis(&args)
        };
        let a = run("1");
        let b = run("2");
        assert!(a.status.success(), "{}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{suite:?}");
    }
}

#[test]
fn emitted_config_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    let o = heis(&[
        "lemmas",
        "--seed",
        "7",
        "--field",
        "vertical-wave",
        "--param",
        "omega=2",
        "--emit-config",
        cfg.to_str().unwrap(),
        "--out",
        first.to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let o = heis(&["lemmas", "--config", cfg.to_str().unwrap(), "--out", second.to_str().unwrap(), "--no-timestamp"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(&cfg, "# beta profile\nper-decade = 1 # coarse\nrmin = 0.1\nrmax = 10\nseed = 3\n");
    let o = heis(&["beta", "--config", cfg.to_str().unwrap(), "--seed", "9", "--no-timestamp"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = stdout(&o);
    assert!(doc.contains("# config: seed = 9\n"));
    assert!(doc.contains("# config: per_decade = 1\n"));
    assert_eq!(rows(&doc).len(), 3);

    write(&cfg, "colour = red\n");
    let o = heis(&["beta", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown config key `colour`"));
}

#[test]
fn json_document_shape() {
    let o = heis(&["poincare", "--format", "json", "--no-timestamp"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["meta"]["suite"], "poincare");
    assert_eq!(v["meta"]["config"]["seed"], "42");
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 4);
    assert!(results.iter().all(|r| r["passed"] == true && r["ratio"].as_f64().unwrap().is_finite()));
}
