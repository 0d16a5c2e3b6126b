//! Rounded MM counts against the exhaustive optimum on tiny instances.

use greencell::baselines::brute_force_optimum;
use greencell::instance::random_feasible;
use greencell::mm::MmConfig;
use greencell::pipeline::reconfigure;

fn main() -> greencell::Result<()> {
    let mut gaps = Vec::new();
    for seed in 0..20 {
        let inst = random_feasible(seed, 5, 9)?;
        let (opt, _) = brute_force_optimum(&inst.link, &inst.capacities())?;
        match reconfigure(&inst, &MmConfig::default()) {
            Ok(r) => {
                let got = r.energy.active_count;
                println!("seed {seed:>2}: optimum {opt}, mm {got}");
                gaps.push(got - opt);
            }
            Err(e) => println!("seed {seed:>2}: optimum {opt}, mm failed: {e}"),
        }
    }
    let mean = gaps.iter().sum::<usize>() as f64 / gaps.len() as f64;
    println!("mean gap {mean:.2} over {} solved", gaps.len());
    Ok(())
}
