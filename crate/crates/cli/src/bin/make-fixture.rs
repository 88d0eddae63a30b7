//! Regenerates the bundled synthetic fixture.
//!
//! Usage: make-fixture [DIR]   (default: the crate's fixtures/synthetic)

use std::path::PathBuf;
use std::process::ExitCode;

fn main() -> ExitCode {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic"));
    match crisiscomm::fixture::write_fixture(&dir) {
        Ok(()) => {
            println!("wrote fixture to {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
