//! Acceptance criteria 1–9: one test, and one PASS/FAIL line, per criterion.
//! Run with `--nocapture` to see the details.

use s3curv::selftest::run_criterion;

fn criterion(id: u32) {
    let r = run_criterion(id).unwrap();
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_1_a2_anchor() {
    criterion(1);
}

#[test]
fn criterion_2_a0_a1_anchors() {
    criterion(2);
}

#[test]
fn criterion_3_perturbed_family() {
    criterion(3);
}

#[test]
fn criterion_4_degree_table() {
    criterion(4);
}

#[test]
fn criterion_5_obstruction_sanity() {
    criterion(5);
}

#[test]
fn criterion_6_quadrature_identity() {
    criterion(6);
}

#[test]
fn criterion_7_spectrum() {
    criterion(7);
}

#[test]
fn criterion_8_reduction_properties() {
    criterion(8);
}

#[test]
fn criterion_9_property_suites() {
    criterion(9);
}
