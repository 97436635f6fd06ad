//! Acceptance criteria 1-10, one line each. Runs without the libtest harness so the lines are
//! always printed.

use std::process::ExitCode;
use std::time::Instant;

use froblab_cli::suite::criterion;
use froblab_cli::Perturbation;

fn main() -> ExitCode {
    let start = Instant::now();
    let mut failed = 0;
    for id in 1..=10 {
        let t = Instant::now();
        let r = criterion(id, None, Perturbation::None);
        println!(
            "acceptance {:>2} {} {} ({:.2?}): {}",
            r.id,
            if r.pass { "PASS" } else { "FAIL" },
            r.title,
            t.elapsed(),
            r.detail
        );
        if !r.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of 10 passed in {:.2?}", 10 - failed, start.elapsed());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
