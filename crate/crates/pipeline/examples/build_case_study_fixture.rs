//! Regenerates the case-study fixture directory (default
//! `fixtures/case_study` at the workspace root).

use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/case_study")
        });
    let bundle = ahp_pipeline::fixture::bundle::build()?;
    ahp_pipeline::fixture::bundle::write(&bundle, &dir)?;
    println!("wrote {} files to {}", bundle.len(), dir.display());
    Ok(())
}
