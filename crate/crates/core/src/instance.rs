use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::radio::{build_link_matrix, LinkMatrix, RadioConfig};
use crate::scenario::{
    sample_shadowing, sample_users, HotspotSpec, NetworkTopology, Point, Station, User,
    UserSnapshot,
};

/// One problem instance: stations, users, and the link quantities between them.
/// Every solver consumes the same `Instance` so comparisons are fair.
#[derive(Clone, Debug)]
pub struct Instance {
    pub topology: NetworkTopology,
    pub users: UserSnapshot,
    pub link: LinkMatrix,
}

impl Instance {
    pub fn new(topology: NetworkTopology, users: UserSnapshot, link: LinkMatrix) -> Result<Self> {
        if link.num_stations() != topology.len() || link.num_users() != users.len() {
            return Err(Error::invalid("link matrix shape disagrees with topology/users"));
        }
        Ok(Self {
            topology,
            users,
            link,
        })
    }

    /// Runs the propagation model over a topology/snapshot pair, drawing
    /// shadow fading from `seed`.
    pub fn with_radio(
        topology: NetworkTopology,
        users: UserSnapshot,
        radio: &RadioConfig,
        seed: u64,
    ) -> Result<Self> {
        let shadow = sample_shadowing(seed, topology.len(), users.len(), radio.shadow_sigma_db)?;
        let link = build_link_matrix(&topology, &users, radio, &shadow)?;
        Self::new(topology, users, link)
    }

    pub fn num_stations(&self) -> usize {
        self.topology.len()
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.topology.capacities()
    }
}

/// A small random instance that is feasible by construction.
///
/// Stations and users are dropped uniformly on a 2 km torus and run through
/// the default propagation model. Each station's budget is a random share of
/// the total best-link demand, raised where needed so that serving every user
/// from its best station fits with 50% headroom.
pub fn random_feasible(seed: u64, stations: usize, users: usize) -> Result<Instance> {
    if stations == 0 || users == 0 {
        return Err(Error::invalid("need at least one station and one user"));
    }
    let extent = Point::new(2000.0, 2000.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions: Vec<Point> = (0..stations)
        .map(|_| {
            Point::new(
                rng.random_range(0.0..extent.x),
                rng.random_range(0.0..extent.y),
            )
        })
        .collect();
    let snapshot = sample_users(seed, users as f64, 122e3, &HotspotSpec::none(), extent, true)?;

    // provisional budgets; replaced once demands are known
    let provisional = NetworkTopology::new(
        positions
            .iter()
            .enumerate()
            .map(|(id, &position)| Station {
                id,
                position,
                bandwidth_hz: 1.0,
                static_power_w: 400.0,
            })
            .collect(),
        extent,
    )?;
    let radio = RadioConfig::default();
    let probe = Instance::with_radio(provisional, snapshot.clone(), &radio, seed)?;
    let demand = probe.link.demand();

    let mut hidden_load = vec![0.0; stations];
    let mut total_best = 0.0;
    for j in 0..users {
        let best = (0..stations)
            .min_by(|&a, &b| demand[(a, j)].total_cmp(&demand[(b, j)]))
            .expect("at least one station");
        hidden_load[best] += demand[(best, j)];
        total_best += demand[(best, j)];
    }
    let topology = NetworkTopology::new(
        positions
            .iter()
            .enumerate()
            .map(|(id, &position)| Station {
                id,
                position,
                bandwidth_hz: (1.5 * hidden_load[id]).max(rng.random_range(0.4..0.9) * total_best),
                static_power_w: 400.0,
            })
            .collect(),
        extent,
    )?;
    Instance::new(topology, snapshot, probe.link)
}

/// Builds an instance directly from spectral efficiencies, for hand-made
/// examples. Users sit at the given positions on a 10 km torus.
pub fn from_spectral_efficiency(
    station_positions: &[(f64, f64)],
    capacities: &[f64],
    user_positions: &[(f64, f64)],
    rates: &[f64],
    spec_eff: crate::Matrix,
) -> Result<Instance> {
    let extent = Point::new(10_000.0, 10_000.0);
    if station_positions.len() != capacities.len() || user_positions.len() != rates.len() {
        return Err(Error::invalid("position and parameter lists differ in length"));
    }
    let topology = NetworkTopology::new(
        station_positions
            .iter()
            .zip(capacities)
            .enumerate()
            .map(|(id, (&(x, y), &bandwidth_hz))| Station {
                id,
                position: Point::new(x, y),
                bandwidth_hz,
                static_power_w: 400.0,
            })
            .collect(),
        extent,
    )?;
    let users = UserSnapshot::new(
        user_positions
            .iter()
            .zip(rates)
            .enumerate()
            .map(|(id, (&(x, y), &rate_bps))| User {
                id,
                position: Point::new(x, y),
                rate_bps,
            })
            .collect(),
        extent,
    )?;
    let link = LinkMatrix::from_spectral_efficiency(spec_eff, rates.to_vec())?;
    Instance::new(topology, users, link)
}
