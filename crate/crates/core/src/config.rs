//! Run configuration: one TOML file capturing the scenario, propagation
//! model, solver settings and output location of an experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::io;
use crate::mm::MmConfig;
use crate::radio::RadioConfig;
use crate::scenario::{generate_hex_grid, sample_users, HotspotSpec, NetworkTopology, UserSnapshot};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub spacing_m: f64,
    pub bandwidth_hz: f64,
    pub static_power_w: f64,
    pub rate_bps: f64,
    /// Mean number of users in one snapshot.
    pub mean_users: f64,
    /// Load levels (mean user counts) for a sweep; `[mean_users]` when empty.
    pub lambda_list: Vec<f64>,
    /// Use exactly `mean_users` users instead of a Poisson draw.
    pub fixed_user_count: bool,
    pub seed: u64,
    pub hotspots: HotspotSpec,
    /// Load stations from a file instead of generating the hex grid.
    pub topology_file: Option<PathBuf>,
    /// Load users from a file instead of sampling them.
    pub users_file: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            grid_rows: 10,
            grid_cols: 10,
            spacing_m: 500.0,
            bandwidth_hz: 5e6,
            static_power_w: 400.0,
            rate_bps: 122e3,
            mean_users: 400.0,
            lambda_list: Vec::new(),
            fixed_user_count: false,
            seed: 1,
            hotspots: HotspotSpec::default(),
            topology_file: None,
            users_file: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub radio: RadioConfig,
    pub solver: MmConfig,
    /// Snapshots per load level in a sweep.
    pub realizations: usize,
    /// Also compute the exact optimum in sweeps (small grids only).
    pub brute_force: bool,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            radio: RadioConfig::default(),
            solver: MmConfig::default(),
            realizations: 10,
            brute_force: false,
            output: OutputConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub lambda_list: Option<Vec<f64>>,
    pub realizations: Option<usize>,
    pub brute_force: bool,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file. Relative scenario file paths resolve against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.scenario.topology_file, &mut cfg.scenario.users_file]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.scenario.seed = s;
        }
        if let Some(l) = &o.lambda_list {
            self.scenario.lambda_list = l.clone();
        }
        if let Some(r) = o.realizations {
            self.realizations = r;
        }
        if o.brute_force {
            self.brute_force = true;
        }
        if let Some(d) = &o.out {
            self.output.dir = d.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        let cfg_err = |e: Error| match e {
            Error::InvalidInput(m) => Error::Config(m),
            other => other,
        };
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        if s.topology_file.is_none() && (s.grid_rows == 0 || s.grid_cols == 0) {
            return Err(Error::Config("grid needs at least one row and column".into()));
        }
        for (name, v) in [
            ("spacing_m", s.spacing_m),
            ("bandwidth_hz", s.bandwidth_hz),
            ("static_power_w", s.static_power_w),
            ("rate_bps", s.rate_bps),
            ("mean_users", s.mean_users),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("scenario.{name} must be positive, got {v}")));
            }
        }
        if let Some(v) = s.lambda_list.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("lambda_list entries must be positive, got {v}")));
        }
        s.hotspots.validate().map_err(cfg_err)?;
        self.radio.validate().map_err(cfg_err)?;
        self.solver.validate().map_err(cfg_err)?;
        Ok(())
    }

    /// Load levels of a sweep.
    pub fn load_levels(&self) -> Vec<f64> {
        if self.scenario.lambda_list.is_empty() {
            vec![self.scenario.mean_users]
        } else {
            self.scenario.lambda_list.clone()
        }
    }

    pub fn topology(&self) -> Result<NetworkTopology> {
        let s = &self.scenario;
        match &s.topology_file {
            Some(p) => io::read_topology(p),
            None => generate_hex_grid(s.grid_rows, s.grid_cols, s.spacing_m, s.bandwidth_hz, s.static_power_w),
        }
    }

    pub fn users(&self, topology: &NetworkTopology, mean_users: f64, seed: u64) -> Result<UserSnapshot> {
        let s = &self.scenario;
        match &s.users_file {
            Some(p) => io::read_users(p),
            None => sample_users(
                seed,
                mean_users,
                s.rate_bps,
                &s.hotspots,
                topology.extent(),
                s.fixed_user_count,
            ),
        }
    }

    /// The snapshot of one realization: users and shadowing both come from `seed`.
    pub fn instance(&self, mean_users: f64, seed: u64) -> Result<Instance> {
        let topology = self.topology()?;
        let users = self.users(&topology, mean_users, seed)?;
        if users.extent() != topology.extent() {
            return Err(Error::Config("users and stations live on different extents".into()));
        }
        Instance::with_radio(topology, users, &self.radio, seed)
    }
}

/// Seed of realization `r`: consecutive seeds from the base, the same at every load level.
pub fn realization_seed(base: u64, r: usize) -> u64 {
    base.wrapping_add(r as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(cfg.scenario.grid_rows, 10);
        assert_eq!(cfg.solver.max_iters, 20);
        cfg.validate().unwrap();
    }

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_sections() {
        let cfg = RunConfig::from_toml(
            "realizations = 3\n[scenario]\ngrid_rows = 5\n[scenario.hotspots]\ncount = 0\n[solver]\nepsilon = 0.01\n",
        )
        .unwrap();
        assert_eq!(cfg.realizations, 3);
        assert_eq!((cfg.scenario.grid_rows, cfg.scenario.grid_cols), (5, 10));
        assert_eq!(cfg.scenario.hotspots.count, 0);
        assert_eq!(cfg.scenario.hotspots.radius_m, 500.0);
        assert_eq!(cfg.solver.epsilon, 0.01);
        assert_eq!(cfg.solver.epsilon_star, 1e-3);
    }

    #[test]
    fn unknown_key_and_bad_values_are_config_errors() {
        assert!(matches!(RunConfig::from_toml("[scenario]\ngird_rows = 3"), Err(Error::Config(_))));
        let bad = RunConfig::from_toml("realizations = 0").unwrap();
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = RunConfig::from_toml("[radio]\nsinr_eff = 0.0").unwrap();
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = RunConfig::from_toml("[scenario.hotspots]\ncount = 30").unwrap();
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn flags_win() {
        let mut cfg = RunConfig::from_toml("[scenario]\nseed = 4\nlambda_list = [1.0]").unwrap();
        cfg.apply(&Overrides {
            seed: Some(9),
            lambda_list: Some(vec![2.0, 3.0]),
            realizations: Some(2),
            brute_force: true,
            out: Some("x".into()),
        });
        assert_eq!(cfg.scenario.seed, 9);
        assert_eq!(cfg.load_levels(), vec![2.0, 3.0]);
        assert_eq!(cfg.realizations, 2);
        assert!(cfg.brute_force);
        assert_eq!(cfg.output.dir, PathBuf::from("x"));
    }
}
