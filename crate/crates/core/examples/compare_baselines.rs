//! MM against greedy switch-off and nearest-station assignment over a few
//! load levels. Writes the sweep CSVs to `out/compare_baselines`.

use greencell::config::RunConfig;
use greencell::harness::{cmd_sweep, Stat};

fn main() -> greencell::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.scenario.grid_rows = 6;
    cfg.scenario.grid_cols = 6;
    cfg.scenario.lambda_list = vec![40.0, 80.0, 120.0, 160.0];
    cfg.realizations = 5;
    cfg.output.dir = "out/compare_baselines".into();

    let r = cmd_sweep(&cfg)?;
    let fmt = |s: Option<Stat>| match s {
        Some(Stat { mean, sem: Some(e), .. }) => format!("{mean:5.1} ± {e:.1}"),
        Some(Stat { mean, sem: None, .. }) => format!("{mean:5.1}"),
        None => "-".into(),
    };
    println!("lambda  mm            greedy        nearest");
    for l in &r.levels {
        println!("{:>6}  {:<12}  {:<12}  {}", l.lambda, fmt(l.mm), fmt(l.greedy_switchoff), fmt(l.nearest));
    }
    for f in &r.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
