//! Run the invariant checks the `validate` subcommand runs, on a small grid.

use greencell::config::RunConfig;
use greencell::harness::{cmd_validate, ValidateOptions};

fn main() -> greencell::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.scenario.grid_rows = 4;
    cfg.scenario.grid_cols = 4;
    cfg.scenario.mean_users = 60.0;
    let checks = cmd_validate(&cfg, &ValidateOptions::default())?;
    for c in &checks {
        println!("{c}");
    }
    if checks.iter().any(|c| !c.passed) {
        std::process::exit(1);
    }
    Ok(())
}
