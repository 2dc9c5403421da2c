//! One PASS/FAIL line per acceptance criterion.

use std::process::ExitCode;

use treechain::selftest;

fn main() -> ExitCode {
    let reports = selftest::run_all();
    for r in &reports {
        println!("{}", selftest::line(r));
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} passed, {} failed", reports.len() - failed, failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
