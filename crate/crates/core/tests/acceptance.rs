//! Acceptance suite: one test per criterion, each printing a pass/fail
//! transcript line.  Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines.

use refposet::acceptance::{self, CriterionReport, DEFAULT_SEED};

fn report(r: CriterionReport) {
    println!(
        "[{}] {} — {}",
        if r.passed { "PASS" } else { "FAIL" },
        r.name,
        r.details
    );
    assert!(r.passed, "{}: {}", r.name, r.details);
}

#[test]
fn criterion_exponent_bound() {
    report(acceptance::exponent_bound());
}

#[test]
fn criterion_nested_stabilization() {
    report(acceptance::nested_stabilization());
}

#[test]
fn criterion_disjoint_amalgamation() {
    report(acceptance::amalgamation(DEFAULT_SEED));
}

#[test]
fn criterion_absolute_indiscernibility() {
    report(acceptance::absolute_indiscernibility());
}

#[test]
fn criterion_bipartite_roundtrip() {
    report(acceptance::bipartite_roundtrip(DEFAULT_SEED));
}

#[test]
fn criterion_shift1_transport() {
    report(acceptance::shift1_transport(DEFAULT_SEED));
}

#[test]
fn criterion_twolevel_encoder() {
    report(acceptance::twolevel_encoder(DEFAULT_SEED));
}

#[test]
fn criterion_sb_backforth() {
    report(acceptance::sb_backforth(DEFAULT_SEED));
}

#[test]
fn criterion_reduct_classification() {
    report(acceptance::reduct_classification(DEFAULT_SEED));
}

#[test]
fn criterion_classification_table() {
    report(acceptance::classification_table());
}
