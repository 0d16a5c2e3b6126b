//! Write a topology and user snapshot as text, read them back, and check
//! the round trip is exact.

use std::path::Path;

use greencell::config::RunConfig;
use greencell::io;

fn main() -> greencell::Result<()> {
    let cfg = RunConfig::default();
    let topo = cfg.topology()?;
    let users = cfg.users(&topo, 150.0, 42)?;

    let dir = Path::new("out/export_scenario");
    std::fs::create_dir_all(dir)?;
    io::write_topology(&dir.join("topology.txt"), &topo)?;
    io::write_users(&dir.join("users.txt"), &users)?;

    let topo2 = io::read_topology(&dir.join("topology.txt"))?;
    let users2 = io::read_users(&dir.join("users.txt"))?;
    assert_eq!(io::topology_text(&topo), io::topology_text(&topo2));
    assert_eq!(io::users_text(&users), io::users_text(&users2));
    println!("{} stations and {} users written to {}", topo.len(), users.len(), dir.display());
    for line in io::users_text(&users).lines().take(4) {
        println!("{line}");
    }
    println!("...");
    Ok(())
}
