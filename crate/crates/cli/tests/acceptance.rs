//! Acceptance suite: one test per verification criterion. Each test prints
//! a single pass/fail line (visible with `--nocapture`) and asserts the
//! outcome, so `cargo test` is the gate and the lines document it.

use semra::verify;

fn assert_criterion(outcome: verify::CriterionOutcome) {
    println!("{}", outcome.line());
    assert!(outcome.passed, "{}", outcome.line());
}

#[test]
fn criterion_01_oracle_equivalence() {
    assert_criterion(verify::oracle_equivalence());
}

#[test]
fn criterion_02_greedy_ratio() {
    assert_criterion(verify::greedy_ratio());
}

#[test]
fn criterion_03_diminishing_returns() {
    assert_criterion(verify::diminishing_returns());
}

#[test]
fn criterion_04_weak_duality() {
    assert_criterion(verify::weak_duality());
}

#[test]
fn criterion_05_kkt_convergence() {
    assert_criterion(verify::kkt_convergence());
}

#[test]
fn criterion_06_gradient_check() {
    assert_criterion(verify::gradient_check());
}

#[test]
fn criterion_07_metrics_golden_values() {
    assert_criterion(verify::metrics_golden());
}

#[test]
fn criterion_08_channel_statistics() {
    assert_criterion(verify::channel_statistics());
}

#[test]
fn criterion_09_trend_reproduction() {
    assert_criterion(verify::trend_reproduction());
}

#[test]
fn criterion_10_determinism() {
    assert_criterion(verify::determinism());
}
