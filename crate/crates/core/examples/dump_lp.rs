//! Print the first reweighted LP of a small snapshot in LP format, ready
//! for an external solver, and our own optimum for comparison.

use greencell::config::RunConfig;
use greencell::lp::{self, AssignmentLp};
use greencell::mm;

fn main() -> greencell::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.scenario.grid_rows = 2;
    cfg.scenario.grid_cols = 2;
    cfg.scenario.fixed_user_count = true;
    let inst = cfg.instance(6.0, 3)?;

    let w0 = mm::initialize(&inst.link, &inst.topology, &inst.users)?;
    let weights: Vec<f64> = w0.row_sums().iter().map(|s| 1.0 / (cfg.solver.epsilon + s)).collect();
    let mut lp = AssignmentLp::new(&inst.link, &inst.capacities())?;
    lp.set_station_costs(&weights)?;

    lp::write_lp_format(&lp, &mut std::io::stdout().lock())?;
    let sol = lp::solve(&lp)?;
    eprintln!("simplex: {:?}, objective {:.6}", sol.status, lp.objective(&sol.w));
    Ok(())
}
