//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::process::ExitCode;

use juggernaut_core::harness::acceptance;

fn main() -> ExitCode {
    let results = acceptance::run(|r| println!("{r}"));
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed == 0 {
        println!("acceptance: all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of {} criteria failed", results.len());
        ExitCode::FAILURE
    }
}
