//! Acceptance criteria: one PASS/FAIL line each, non-zero exit on any failure.

use perptail_core::harness::ACCEPTANCE;

fn main() {
    // `cargo test -- --list` and filters are not meaningful here
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failed = Vec::new();
    for (name, f) in ACCEPTANCE {
        let check = f();
        println!("{}", check.line());
        if !check.passed {
            failed.push(*name);
        }
    }
    if failed.is_empty() {
        println!(
            "acceptance: {} of {} criteria passed",
            ACCEPTANCE.len(),
            ACCEPTANCE.len()
        );
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
