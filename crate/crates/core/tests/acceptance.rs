//! Runs criteria 1–9 at full scale (seed 42, 20 trials, each criterion at its
//! own mode cap) and prints one line per criterion.

use std::io::Write;

use oddpu::verify::{run_criterion, SuiteConfig, CRITERIA};

#[test]
fn acceptance_criteria() {
    let config = SuiteConfig::default();
    // Written to the stdout handle directly so the lines survive output capture.
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    for &(id, _) in CRITERIA.iter() {
        let result = run_criterion(id, &config);
        writeln!(out, "{}", result.summary()).unwrap();
        for check in result.checks.iter().filter(|c| !c.pass) {
            writeln!(out, "    failing {}: worst {:e} at {}", check.property, check.worst, check.worst_at).unwrap();
        }
        if !result.pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
