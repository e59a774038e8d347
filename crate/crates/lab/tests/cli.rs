//! End-to-end runs of the `carnot-lab` binary.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_carnot-lab");

fn config(extra: &str) -> String {
    format!(
        r#"
[group]
preset = "heisenberg1"

[grid]
lo = [-1.0, -1.0, -1.0]
hi = [1.0, 1.0, 1.0]
intervals = 16

[instance]
name = "quadratic"
{extra}"#
    )
}

fn run_with(dir: &Path, text: &str) -> Output {
    let cfg = dir.join("lab.toml");
    std::fs::write(&cfg, text).expect("write config");
    Command::new(BIN).arg("run").arg(&cfg).arg("--out").arg(dir.join("out")).output().expect("binary runs")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("error record on stderr");
    serde_json::from_str(line).expect("stderr carries JSON")
}

#[test]
fn empty_diagnostics_write_only_the_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(dir.path(), &config(""));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<String> =
        std::fs::read_dir(dir.path().join("out")).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert_eq!(names, ["solution.csv"]);
    let csv = std::fs::read_to_string(dir.path().join("out/solution.csv")).unwrap();
    assert!(csv.starts_with("# carnot-obstacle-lab v1\n# grid 17x17x17"));
    // two comment lines, a header and one row per node
    assert_eq!(csv.lines().count(), 3 + 17 * 17 * 17);
}

#[test]
fn small_radius_is_a_precondition_failure() {
    let dir = tempfile::tempdir().unwrap();
    // h = 1/8, so 8h = 1 and r = 0.5 is too small
    let out = run_with(dir.path(), &config("\n[[diagnostics]]\nkind = \"growth\"\nx0 = [0.0, 0.0, 0.0]\nradii = [0.5]\n"));
    assert_eq!(out.status.code(), Some(4));
    let rec = stderr_json(&out);
    assert_eq!(rec["status"], "error");
    assert_eq!(rec["kind"], "precondition");
    assert_eq!(rec["exit_code"], 4);
    assert!(rec["message"].as_str().unwrap().contains("8h"));
    assert!(!dir.path().join("out/solution.csv").exists(), "nothing is solved before validation");
}

#[test]
fn malformed_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(dir.path(), "[group]\npreset = \"heisenberg1\"\nbogus = 1\n");
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["kind"], "config");
}

#[test]
fn unknown_instance_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(dir.path(), &config("").replace("quadratic", "nonexistent"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diagnostics_on_a_valid_run_produce_reports() {
    let dir = tempfile::tempdir().unwrap();
    let extra = "\n[output]\nbinary = true\n\n[[diagnostics]]\nkind = \"c11\"\nlo = [-0.5, -0.5, -0.5]\nhi = [0.5, 0.5, 0.5]\n\n\
                 [[diagnostics]]\nkind = \"c11\"\nlo = [-0.25, -0.25, -0.25]\nhi = [0.25, 0.25, 0.25]\n";
    let out = run_with(dir.path(), &config(extra));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["solution.csv", "solution.bin", "c11.csv", "c11_1.csv"] {
        assert!(dir.path().join("out").join(name).exists(), "{name} missing");
    }
    let report = std::fs::read_to_string(dir.path().join("out/c11.csv")).unwrap();
    assert!(report.lines().nth(1).unwrap().starts_with("x0,r,r2,quantity,value,h,grid_id"));
}

#[test]
fn unknown_suite_exits_with_two() {
    let out = Command::new(BIN).args(["verify", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["kind"], "config");
}

#[test]
fn algebra_suite_passes() {
    let out = Command::new(BIN).args(["verify", "algebra"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
}
