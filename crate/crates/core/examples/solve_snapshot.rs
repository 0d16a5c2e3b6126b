//! Switch off as many stations as possible in one 100-cell snapshot.
//!
//! cargo run --release --example solve_snapshot -- [seed]

use greencell::config::RunConfig;
use greencell::pipeline::reconfigure;

fn main() -> greencell::Result<()> {
    let seed = std::env::args().nth(1).map_or(1, |s| s.parse().expect("seed"));
    let cfg = RunConfig::default();
    let inst = cfg.instance(cfg.scenario.mean_users, seed)?;
    let r = reconfigure(&inst, &cfg.solver)?;

    println!("{} stations, {} users", inst.num_stations(), inst.num_users());
    println!(
        "relaxed active {} -> rounded {} ({} W) after {} iterations ({})",
        r.relaxed.active_count(),
        r.energy.active_count,
        r.energy.total_power_w,
        r.trace.iterations_used,
        r.trace.termination
    );
    let served: Vec<usize> = r
        .assignment
        .active_set()
        .iter()
        .map(|&i| r.assignment.assigned_station().iter().filter(|&&s| s == i).count())
        .collect();
    println!("users per active station: {served:?}");
    Ok(())
}
