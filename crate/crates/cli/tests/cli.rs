use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const HYPERBOLIC: &str = r#"{"dimension": 3, "catalog": {"name": "hyperbolic"}}"#;

const EUCLIDEAN: &str = r#"{
  "dimension": 3,
  "chart": {
    "coordinates": [
      {"name": "r", "range": [0.5, null]},
      {"name": "theta", "range": [0, "pi"]},
      {"name": "phi", "period": "2*pi"}
    ],
    "asymptotic": "r",
    "cross_section": "sphere"
  },
  "components": {"r,r": "1", "theta,theta": "r^2", "phi,phi": "r^2*sin(theta)^2"}
}"#;

const SCALED: &str = r#"{
  "dimension": 3,
  "chart": {
    "coordinates": [
      {"name": "r", "range": [0, null]},
      {"name": "theta", "range": [0, "pi"]},
      {"name": "phi", "period": "2*pi"}
    ],
    "asymptotic": "r",
    "cross_section": "sphere"
  },
  "parameters": {"c": 0.81},
  "components": {"r,r": "c/(1+r^2)", "theta,theta": "c*r^2", "phi,phi": "c*r^2*sin(theta)^2"}
}"#;

fn alh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alh")).args(args).env_remove("ALH_THREADS").output().unwrap()
}

fn write_spec(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn catalog_lists_families_alphabetically() {
    let o = alh(&["catalog"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let names: Vec<&str> = text.lines().skip(1).map(|l| l.split("  ").next().unwrap().trim()).collect();
    assert_eq!(names, ["birmingham k=-1", "birmingham k=0", "birmingham k=1", "hyperbolic"]);
    let counts: Vec<&str> = text.lines().skip(1).map(|l| l.split_whitespace().last().unwrap()).collect();
    assert_eq!(counts, ["1", "1", "4", "4"]);
    let four = String::from_utf8(alh(&["catalog", "--dimension", "4"]).stdout).unwrap();
    assert!(four.lines().last().unwrap().ends_with('5'));
}

#[test]
fn mass_writes_report_and_table() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(dir.path(), "hyp.json", HYPERBOLIC);
    let out = dir.path().join("out");
    fs::create_dir(&out).unwrap();
    let o = alh(&["mass", s(&spec), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut names: Vec<String> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["hyp.convergence.csv", "hyp.mass.json"]);

    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("hyp.mass.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "mass");
    assert_eq!(report["exit_code"], 0);
    assert_eq!(report["energy_momentum"]["class"], "zero");
    assert_eq!(report["results"].as_array().unwrap().len(), 4);
    assert_eq!(report["config"]["potentials"][0]["expr"], "sqrt(r^2 + 1)");

    let csv = fs::read_to_string(out.join("hyp.convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("potential,x,m(x),extrapolant,error-estimate"));
    assert_eq!(lines.count(), 16);
}

#[test]
fn non_decaying_curvature_is_a_divergence() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(dir.path(), "flat.json", EUCLIDEAN);
    let o = alh(&["mass", s(&spec), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("flat.mass.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "divergent");
    assert!(report["divergence"]["table"].as_array().unwrap().len() >= 4);
}

#[test]
fn check_prints_json_and_flags_violations() {
    let dir = TempDir::new().unwrap();
    let good = write_spec(dir.path(), "hyp.json", HYPERBOLIC);
    let o = alh(&["check", s(&good)]);
    assert_eq!(o.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["verdict"]["hypotheses_satisfied"], true);
    assert!(report["scalar_margin"]["value"].as_f64().unwrap().abs() <= 1e-9);

    let bad = write_spec(dir.path(), "scaled.json", SCALED);
    let o = alh(&["check", s(&bad), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("scaled.check.json")).unwrap()).unwrap();
    let margin = report["scalar_margin"]["value"].as_f64().unwrap();
    assert!((margin - (6.0 - 6.0 / 0.81)).abs() <= 1e-9, "{margin}");
}

#[test]
fn check_with_boundary_reports_mean_curvature() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(
        dir.path(),
        "ball.json",
        r#"{"dimension": 3, "catalog": {"name": "hyperbolic"}, "boundary": {"coord": "r", "value": 1}}"#,
    );
    let o = alh(&["check", s(&spec)]);
    assert_eq!(o.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let m = report["boundary"]["margin"]["value"].as_f64().unwrap();
    assert!((m + 2.0 * 2f64.sqrt() + 2.0).abs() <= 1e-9, "{m}");
}

#[test]
fn zero_rapidity_boost_changes_nothing() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(dir.path(), "bh.json", r#"{"dimension": 3, "catalog": {"name": "birmingham", "params": {"k": 1, "m": 0.5}}}"#);
    let o = alh(&["boost", s(&spec), "--dir", "1", "--beta", "0", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("bh.boost.json")).unwrap()).unwrap();
    assert_eq!(report["max_deviation"], 0.0);
    assert_eq!(report["before"], report["after"]);
    assert_eq!(report["class_after"], "timelike-future");
}

#[test]
fn boosts_need_an_ah_end() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(dir.path(), "tor.json", r#"{"dimension": 3, "catalog": {"name": "birmingham", "params": {"k": 0, "m": -0.4}}}"#);
    let o = alh(&["boost", s(&spec), "--dir", "1", "--beta", "-0.3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("tor.json"));
}

#[test]
fn input_errors_exit_with_one_and_name_the_problem() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.json");
    let o = alh(&["mass", s(&missing)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.json"));

    let unknown = write_spec(dir.path(), "u.json", r#"{"dimension": 3, "catalog": {"name": "hyperbolic"}, "bogus": 1}"#);
    let o = alh(&["mass", s(&unknown)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bogus"));

    let both = write_spec(
        dir.path(),
        "b.json",
        r#"{"dimension": 3, "catalog": {"name": "hyperbolic"}, "components": {"r,r": "1"}}"#,
    );
    assert_eq!(alh(&["check", s(&both)]).status.code(), Some(1));

    let typo = write_spec(
        dir.path(),
        "t.json",
        r#"{"dimension": 3, "chart": {"coordinates": [{"name": "r", "range": [0, null]}, {"name": "theta", "range": [0, "pi"]}, {"name": "phi", "period": "2*pi"}], "asymptotic": "r", "cross_section": "sphere"}, "components": {"r,r": "1/(1+r^2", "theta,theta": "r^2", "phi,phi": "r^2*sin(theta)^2"}}"#,
    );
    let o = alh(&["mass", s(&typo)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("r,r"), "{}", stderr(&o));

    assert_eq!(alh(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(alh(&["boost", s(&unknown), "--dir", "1"]).status.code(), Some(1));
    assert_eq!(alh(&["--help"]).status.code(), Some(0));
}

#[test]
fn thread_count_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_alh")).arg("catalog").env("ALH_THREADS", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ALH_THREADS"));
    let o = Command::new(env!("CARGO_BIN_EXE_alh")).arg("catalog").env("ALH_THREADS", "2").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(dir.path(), "bh.json", r#"{"dimension": 3, "catalog": {"name": "birmingham", "params": {"k": 1, "m": 0.1}}}"#);
    let mut reports = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        fs::create_dir(&out).unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_alh"))
            .args(["mass", s(&spec), "--out", s(&out)])
            .env("ALH_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        reports.push(fs::read(out.join("bh.mass.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}
