//! Builds a system, writes it to a temporary directory and runs every
//! verification suite through the command-line entry points.
//!
//! Usage: cargo run --release --example verify_suite [count]

use apblow::cli::{cmd_build, cmd_verify, RunConfig, Setting};

fn main() -> anyhow::Result<()> {
    let count: usize = std::env::args()
        .nth(1)
        .map(|a| a.parse())
        .transpose()?
        .unwrap_or(1000);
    let dir = tempfile::tempdir()?;
    let cfg = RunConfig {
        count,
        epsilon: Setting::Value(0.07),
        out: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    cfg.validate()?;
    let system = cmd_build(&cfg)?;
    let outcome = cmd_verify(&cfg, &system, &[])?;
    println!("outcome: {outcome:?}");
    print!(
        "{}",
        std::fs::read_to_string(dir.path().join("verify.csv"))?
    );
    Ok(())
}
