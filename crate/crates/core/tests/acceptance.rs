//! Runs the full acceptance suite and prints one line per criterion.

use std::io::Write;

use meanfield::experiments::run_acceptance;

#[test]
fn acceptance_criteria() {
    let outcomes = run_acceptance(|o| {
        // written past the test harness capture so the lines always show
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{}", o.line());
        let _ = out.flush();
    });
    let failed: Vec<_> = outcomes.iter().filter(|o| !o.passed).map(|o| format!("C{}", o.id)).collect();
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "acceptance: {}/{} criteria passed", outcomes.len() - failed.len(), outcomes.len());
    assert!(failed.is_empty(), "failed criteria: {}", failed.join(", "));
}
