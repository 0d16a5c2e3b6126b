//! Objective and active-count per MM iteration, run to the iteration cap so
//! the tail is visible.

use greencell::config::RunConfig;
use greencell::mm::{self, MmConfig};

fn main() -> greencell::Result<()> {
    let cfg = RunConfig::default();
    let inst = cfg.instance(cfg.scenario.mean_users, cfg.scenario.seed)?;
    let all = MmConfig {
        run_all_iterations: true,
        ..cfg.solver.clone()
    };
    let (_, trace) = mm::run_instance(&inst, &all)?;
    let (_, stopped) = mm::run_instance(&inst, &cfg.solver)?;

    println!("iteration  objective  active");
    for (k, (f, a)) in trace.objective_per_iter.iter().zip(&trace.active_count_per_iter).enumerate() {
        let mark = if k == stopped.iterations_used { "  <- tolerance stop" } else { "" };
        println!("{k:>9}  {f:>9.3}  {a:>6}{mark}");
    }
    Ok(())
}
