//! End-to-end acceptance gate: one test per statistical criterion. Each test
//! prints a single verdict line (plus the evidence lines) and asserts the
//! verdict. Criteria 4 and 5 share one simulated ensemble, so they evaluate
//! a shared lazily-initialised run.

use bcl_core::accept::{self, CriterionOutcome};
use once_cell::sync::Lazy;

static BOUNDARY_AND_REPLACEMENT: Lazy<(CriterionOutcome, CriterionOutcome)> =
    Lazy::new(accept::boundary_and_replacement);

fn finish(outcome: &CriterionOutcome) {
    println!("{}", outcome.verdict_line());
    for line in &outcome.details {
        println!("    {line}");
    }
    assert!(outcome.pass, "{}", outcome.verdict_line());
}

#[test]
fn criterion_01_gibbs_invariance() {
    finish(&accept::gibbs_invariance());
}

#[test]
fn criterion_02_static_covariance() {
    finish(&accept::static_covariance());
}

#[test]
fn criterion_03_qv_limit() {
    finish(&accept::qv_limit());
}

#[test]
fn criterion_04_boundary_phase_transition() {
    finish(&BOUNDARY_AND_REPLACEMENT.0);
}

#[test]
fn criterion_05_replacement_rates() {
    finish(&BOUNDARY_AND_REPLACEMENT.1);
}

#[test]
fn criterion_06_quadratic_replacement_bound() {
    finish(&accept::quadratic_replacement_bound());
}

#[test]
fn criterion_07_ou_discrimination() {
    finish(&accept::ou_discrimination());
}

#[test]
fn criterion_08_mollifier_regularity() {
    finish(&accept::mollifier_regularity());
}

#[test]
fn criterion_09_nonlinearity_approximation() {
    finish(&accept::nonlinearity_approximation());
}

#[test]
fn criterion_10_generator_term_rates() {
    finish(&accept::generator_term_rates());
}
