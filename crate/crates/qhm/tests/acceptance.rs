//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Exits nonzero when a criterion fails for a reason other than its
//! documented known failure.

use std::process::ExitCode;
use std::time::Instant;

use qhm::validate::{run_criterion, CRITERIA};

fn main() -> ExitCode {
    let start = Instant::now();
    let mut unexpected = 0;
    let mut known = 0;
    for c in CRITERIA {
        let t = Instant::now();
        let o = run_criterion(c);
        let tag = match (o.passed, o.known_failure) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("{tag:<12} criterion {:>2} [{}] {} ({:.1}s)", o.id, o.module, o.title, t.elapsed().as_secs_f64());
        for cl in &o.clauses {
            let mark = if cl.passed { "ok" } else if cl.known { "known failure" } else { "FAILED" };
            println!("             - {}: {mark}: {}", cl.name, cl.detail);
        }
        if !o.passed {
            if o.known_failure {
                known += 1;
            } else {
                unexpected += 1;
            }
        }
    }
    let passed = CRITERIA.len() - known - unexpected;
    println!(
        "\n{passed}/{} criteria passed, {known} known failure(s), {unexpected} unexpected failure(s) in {:.1}s",
        CRITERIA.len(),
        start.elapsed().as_secs_f64()
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
