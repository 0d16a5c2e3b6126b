//! Evaluation world: hexagonal station grid on a torus, and hotspot-weighted
//! random user drops.
//!
//! Every random quantity is drawn from a ChaCha stream keyed by an explicit
//! seed, so a `(parameters, seed)` pair always yields the same world.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Stream ids carved out of one realization seed.
const USER_STREAM: u64 = 1;
const SHADOW_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Station {
    pub id: usize,
    pub position: Point,
    /// Bandwidth budget `B_i` in Hz.
    pub bandwidth_hz: f64,
    /// Static power `c_i` drawn while the station is switched on.
    pub static_power_w: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkTopology {
    stations: Vec<Station>,
    extent: Point,
}

impl NetworkTopology {
    pub fn new(stations: Vec<Station>, extent: Point) -> Result<Self> {
        if !(extent.x > 0.0 && extent.y > 0.0) {
            return Err(Error::invalid(format!(
                "extent must be positive, got ({}, {})",
                extent.x, extent.y
            )));
        }
        for s in &stations {
            if !(s.bandwidth_hz > 0.0 && s.bandwidth_hz.is_finite()) {
                return Err(Error::invalid(format!(
                    "station {}: bandwidth must be positive, got {}",
                    s.id, s.bandwidth_hz
                )));
            }
            if !(s.static_power_w > 0.0 && s.static_power_w.is_finite()) {
                return Err(Error::invalid(format!(
                    "station {}: static power must be positive, got {}",
                    s.id, s.static_power_w
                )));
            }
            if !inside(s.position, extent) {
                return Err(Error::invalid(format!(
                    "station {} at ({}, {}) lies outside the extent",
                    s.id, s.position.x, s.position.y
                )));
            }
        }
        Ok(Self { stations, extent })
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    /// Wrap-around period in x and y.
    pub fn extent(&self) -> Point {
        self.extent
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.stations.iter().map(|s| s.bandwidth_hz).collect()
    }

    pub fn static_powers(&self) -> Vec<f64> {
        self.stations.iter().map(|s| s.static_power_w).collect()
    }

    pub fn distance(&self, station: usize, p: Point) -> f64 {
        wrap_distance(self.stations[station].position, p, self.extent)
    }

    /// Station indices ordered by wrap distance to `p`, ties by lower index.
    pub fn by_distance(&self, p: Point) -> Vec<usize> {
        let dist: Vec<f64> = (0..self.len()).map(|i| self.distance(i, p)).collect();
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
        order
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct User {
    pub id: usize,
    pub position: Point,
    /// Minimum rate `r_j` in bit/s.
    pub rate_bps: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UserSnapshot {
    users: Vec<User>,
    extent: Point,
}

impl UserSnapshot {
    pub fn new(users: Vec<User>, extent: Point) -> Result<Self> {
        for u in &users {
            if !(u.rate_bps > 0.0 && u.rate_bps.is_finite()) {
                return Err(Error::invalid(format!(
                    "user {}: rate must be positive, got {}",
                    u.id, u.rate_bps
                )));
            }
            if !inside(u.position, extent) {
                return Err(Error::invalid(format!(
                    "user {} at ({}, {}) lies outside the extent",
                    u.id, u.position.x, u.position.y
                )));
            }
        }
        Ok(Self { users, extent })
    }

    pub fn users(&self) -> &[User] {
        &self.users
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn extent(&self) -> Point {
        self.extent
    }

    pub fn rates(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.rate_bps).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HotspotSpec {
    pub count: usize,
    pub radius_m: f64,
    /// Probability that a new user lands in one particular hotspot.
    pub drop_probability: f64,
    /// In-hotspot Gaussian spread; `radius_m / 2` when unset.
    pub position_sigma_m: Option<f64>,
    /// Fixed hotspot centers. When unset, centers are drawn uniformly per realization.
    pub centers: Option<Vec<Point>>,
}

impl Default for HotspotSpec {
    fn default() -> Self {
        Self {
            count: 3,
            radius_m: 500.0,
            drop_probability: 0.05,
            position_sigma_m: None,
            centers: None,
        }
    }
}

impl HotspotSpec {
    pub fn none() -> Self {
        Self {
            count: 0,
            ..Self::default()
        }
    }

    pub fn position_sigma(&self) -> f64 {
        self.position_sigma_m.unwrap_or(self.radius_m / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_m > 0.0) {
            return Err(Error::invalid("hotspot radius must be positive"));
        }
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err(Error::invalid("hotspot drop probability must lie in [0, 1]"));
        }
        if self.count as f64 * self.drop_probability > 1.0 + 1e-12 {
            return Err(Error::invalid(
                "hotspot count times drop probability exceeds 1",
            ));
        }
        if !(self.position_sigma() > 0.0) {
            return Err(Error::invalid("hotspot position sigma must be positive"));
        }
        if let Some(c) = &self.centers {
            if c.len() != self.count {
                return Err(Error::invalid(format!(
                    "{} hotspot centers given for {} hotspots",
                    c.len(),
                    self.count
                )));
            }
        }
        Ok(())
    }
}

fn inside(p: Point, extent: Point) -> bool {
    (0.0..extent.x).contains(&p.x) && (0.0..extent.y).contains(&p.y)
}

/// Hexagonal lattice of `rows × cols` stations. Odd rows shift by half a
/// spacing and rows are `spacing·√3/2` apart; the extent is the lattice period.
pub fn generate_hex_grid(
    rows: usize,
    cols: usize,
    spacing_m: f64,
    bandwidth_hz: f64,
    static_power_w: f64,
) -> Result<NetworkTopology> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("hex grid needs at least one row and column"));
    }
    if !(spacing_m > 0.0 && spacing_m.is_finite()) {
        return Err(Error::invalid(format!(
            "station spacing must be positive, got {spacing_m}"
        )));
    }
    let pitch = spacing_m * 3f64.sqrt() / 2.0;
    let extent = Point::new(cols as f64 * spacing_m, rows as f64 * pitch);
    let mut stations = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let offset = if r % 2 == 1 { spacing_m / 2.0 } else { 0.0 };
        for c in 0..cols {
            stations.push(Station {
                id: stations.len(),
                position: Point::new(c as f64 * spacing_m + offset, r as f64 * pitch),
                bandwidth_hz,
                static_power_w,
            });
        }
    }
    NetworkTopology::new(stations, extent)
}

/// Euclidean distance on the torus with periods `extent`.
pub fn wrap_distance(a: Point, b: Point, extent: Point) -> f64 {
    let axis = |d: f64, period: f64| {
        let d = d.abs() % period;
        d.min(period - d)
    };
    axis(a.x - b.x, extent.x).hypot(axis(a.y - b.y, extent.y))
}

fn fold(v: f64, period: f64) -> f64 {
    let f = v.rem_euclid(period);
    // rem_euclid can round up to exactly `period` for tiny negative inputs
    if f >= period {
        0.0
    } else {
        f
    }
}

fn uniform_point(rng: &mut impl Rng, extent: Point) -> Point {
    Point::new(
        rng.random_range(0.0..extent.x),
        rng.random_range(0.0..extent.y),
    )
}

/// Draws one user snapshot. The user count is Poisson with mean
/// `mean_user_count` unless `fixed_count` is set, in which case it is
/// `mean_user_count` rounded.
pub fn sample_users(
    seed: u64,
    mean_user_count: f64,
    rate_bps: f64,
    hotspots: &HotspotSpec,
    extent: Point,
    fixed_count: bool,
) -> Result<UserSnapshot> {
    if !(mean_user_count > 0.0 && mean_user_count.is_finite()) {
        return Err(Error::invalid(format!(
            "mean user count must be positive, got {mean_user_count}"
        )));
    }
    hotspots.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(USER_STREAM);

    let n = if fixed_count {
        mean_user_count.round() as usize
    } else {
        let poisson = Poisson::new(mean_user_count)
            .map_err(|e| Error::invalid(format!("poisson mean: {e}")))?;
        poisson.sample(&mut rng) as usize
    };

    let centers: Vec<Point> = match &hotspots.centers {
        Some(c) => c
            .iter()
            .map(|p| Point::new(fold(p.x, extent.x), fold(p.y, extent.y)))
            .collect(),
        None => (0..hotspots.count)
            .map(|_| uniform_point(&mut rng, extent))
            .collect(),
    };
    let spread = Normal::new(0.0, hotspots.position_sigma())
        .map_err(|e| Error::invalid(format!("hotspot sigma: {e}")))?;
    let hotspot_mass = hotspots.count as f64 * hotspots.drop_probability;

    let mut users = Vec::with_capacity(n);
    for id in 0..n {
        let position = if hotspots.count > 0 && rng.random::<f64>() < hotspot_mass {
            let c = centers[rng.random_range(0..hotspots.count)];
            Point::new(
                fold(c.x + spread.sample(&mut rng), extent.x),
                fold(c.y + spread.sample(&mut rng), extent.y),
            )
        } else {
            uniform_point(&mut rng, extent)
        };
        users.push(User {
            id,
            position,
            rate_bps,
        });
    }
    UserSnapshot::new(users, extent)
}

/// Per-link shadow fading in dB, `stations × users`, Gaussian with std `sigma_db`.
pub fn sample_shadowing(seed: u64, stations: usize, users: usize, sigma_db: f64) -> Result<Matrix> {
    if sigma_db == 0.0 {
        return Ok(Matrix::zeros(stations, users));
    }
    let normal = Normal::new(0.0, sigma_db)
        .map_err(|e| Error::invalid(format!("shadow sigma: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SHADOW_STREAM);
    Ok(Matrix::from_fn(stations, users, |_, _| normal.sample(&mut rng)))
}
