//! Acceptance suite at full scale. Prints one line per criterion.

use std::process::ExitCode;

use dpsa_cli::acceptance::{run_all, Scale};

fn main() -> ExitCode {
    // `cargo test -- --list` and friends pass flags; only run on a plain call
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let fast = std::env::var_os("DPSA_ACCEPTANCE_FAST").is_some();
    let outcomes = run_all(Scale { fast }, |o| {
        println!("{}", o.line());
        println!("    {}", o.timing());
    });
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!(
        "acceptance: {} of {} criteria passed",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
