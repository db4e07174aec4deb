//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines are always shown.

use std::process::ExitCode;

use bloch_cli::validate::{run_check, ValidationOptions, CHECK_NAMES};

fn main() -> ExitCode {
    let opts = ValidationOptions::default();
    println!("acceptance: {} criteria", CHECK_NAMES.len());
    let mut failed = 0;
    for id in 1..=CHECK_NAMES.len() {
        let outcome = run_check(id, &opts);
        println!("{}", outcome.line());
        if !outcome.passed {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        CHECK_NAMES.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
