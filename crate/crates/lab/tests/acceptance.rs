//! The eleven acceptance criteria, one test each. Heavy solves are cached
//! inside `verify`, and a lock keeps the tests from competing for cores so
//! that the wall-clock budgets measure the work itself.

use std::sync::Mutex;

use carnot_lab::verify::{self, Outcome};

static SERIAL: Mutex<()> = Mutex::new(());

fn check(outcome: Outcome) {
    println!("{outcome}");
    assert!(outcome.passed(), "criterion {} failed:\n{}", outcome.id, outcome.detail);
}

fn numbered(id: u8) {
    let _guard = SERIAL.lock().unwrap_or_else(|p| p.into_inner());
    check(verify::criterion(id));
}

#[test]
fn criterion_01_group_algebra() {
    numbered(1);
}

#[test]
fn criterion_02_hessian_roundtrip() {
    numbered(2);
}

#[test]
fn criterion_03_operator_consistency() {
    numbered(3);
}

#[test]
fn criterion_04_fundamental_solution() {
    numbered(4);
}

#[test]
fn criterion_05_exact_recovery() {
    numbered(5);
}

#[test]
fn criterion_06_c11_optimality() {
    numbered(6);
}

#[test]
fn criterion_07_growth() {
    numbered(7);
}

#[test]
fn criterion_08_coincidence_decay() {
    numbered(8);
}

#[test]
fn criterion_09_scaling() {
    numbered(9);
}

#[test]
fn criterion_10_blowup() {
    numbered(10);
}

#[test]
fn criterion_11_cli_determinism() {
    let _guard = SERIAL.lock().unwrap_or_else(|p| p.into_inner());
    let dir = tempfile::tempdir().expect("scratch directory");
    check(verify::cli_determinism(dir.path()));
}
