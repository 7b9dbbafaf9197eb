//! Runs every acceptance criterion and prints one line per criterion.
//! Built without the libtest harness so the lines show under plain `cargo test`.

use std::process::ExitCode;

use rbflow_core::harness::scenarios::{criterion, BUILTINS};

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for k in 1..=12 {
        let name = format!("criterion-{k:02}");
        let description = BUILTINS.iter().find(|s| s.name == name).map_or("", |s| s.description);
        match criterion(k) {
            Ok(report) => {
                let status = if report.passed() { "PASS" } else { "FAIL" };
                println!("criterion {k:>2}: {status}  {description}");
                for c in report.checks.iter().filter(|c| !c.passed) {
                    println!("    {}: {}", c.label, c.detail);
                }
                if !report.passed() {
                    failed.push(k);
                }
            }
            Err(e) => {
                println!("criterion {k:>2}: FAIL  {description} ({e})");
                failed.push(k);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: 12/12 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
