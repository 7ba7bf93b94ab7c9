//! Runs a shipped scenario file through the orchestrator and prints its report.
//!
//! `cargo run --release --example scenario_run -- scenarios/ac05_heat_flow.toml`

use fbsde_lab::orchestrator::{emit_report, load_scenario, run_experiment, RunOptions};

fn main() -> fbsde_lab::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/ac05_heat_flow.toml").into());
    let scenario = load_scenario(&path)?;
    let artifact = run_experiment(&scenario, &RunOptions::default())?;
    print!("{}", emit_report(&artifact).text);
    Ok(())
}
