//! Log-distance path loss with log-normal shadowing, and the spectral
//! efficiency of every station–user link under worst-case interference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scenario::{NetworkTopology, UserSnapshot};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub tx_power_dbm: f64,
    pub pathloss_intercept_db: f64,
    /// Path-loss slope in dB per decade of distance (in km).
    pub pathloss_exponent_coeff: f64,
    pub shadow_sigma_db: f64,
    pub noise_psd_dbm_per_hz: f64,
    /// Bandwidth over which thermal noise is integrated.
    pub noise_bandwidth_hz: f64,
    /// Bandwidth efficiency scaling.
    pub bandwidth_eff: f64,
    /// SINR efficiency scaling.
    pub sinr_eff: f64,
    pub min_distance_m: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            tx_power_dbm: 46.0,
            pathloss_intercept_db: 128.1,
            pathloss_exponent_coeff: 37.6,
            shadow_sigma_db: 8.0,
            noise_psd_dbm_per_hz: -174.0,
            noise_bandwidth_hz: 5e6,
            bandwidth_eff: 1.0,
            sinr_eff: 1.0,
            min_distance_m: 35.0,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.tx_power_dbm,
            self.pathloss_intercept_db,
            self.pathloss_exponent_coeff,
            self.noise_psd_dbm_per_hz,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("radio parameters must be finite"));
        }
        if !(self.bandwidth_eff > 0.0) || !(self.sinr_eff > 0.0) {
            return Err(Error::invalid("efficiency factors must be positive"));
        }
        if !(self.shadow_sigma_db >= 0.0) {
            return Err(Error::invalid("shadow sigma must be non-negative"));
        }
        if !(self.min_distance_m > 0.0) {
            return Err(Error::invalid("minimum distance must be positive"));
        }
        if !(self.noise_bandwidth_hz > 0.0) {
            return Err(Error::invalid("noise bandwidth must be positive"));
        }
        Ok(())
    }

    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_psd_dbm_per_hz + 10.0 * self.noise_bandwidth_hz.log10())
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn path_loss_db(distance_m: f64, cfg: &RadioConfig) -> Result<f64> {
    if !distance_m.is_finite() {
        return Err(Error::invalid(format!("distance must be finite, got {distance_m}")));
    }
    let d = distance_m.max(cfg.min_distance_m);
    Ok(cfg.pathloss_intercept_db + cfg.pathloss_exponent_coeff * (d / 1000.0).log10())
}

pub fn received_power_w(distance_m: f64, shadow_db: f64, cfg: &RadioConfig) -> Result<f64> {
    if !shadow_db.is_finite() {
        return Err(Error::invalid(format!("shadow fading must be finite, got {shadow_db}")));
    }
    let loss = path_loss_db(distance_m, cfg)?;
    Ok(dbm_to_watts(cfg.tx_power_dbm - loss - shadow_db))
}

/// `η_bw · log2(1 + S / (η_sinr · (I + N)))`.
pub fn spectral_efficiency(
    signal_w: f64,
    interference_w: f64,
    noise_w: f64,
    cfg: &RadioConfig,
) -> Result<f64> {
    if !(signal_w >= 0.0) || !(interference_w >= 0.0) {
        return Err(Error::invalid(format!(
            "powers must be non-negative (signal {signal_w}, interference {interference_w})"
        )));
    }
    if !(noise_w > 0.0) {
        return Err(Error::invalid(format!("noise power must be positive, got {noise_w}")));
    }
    let sinr = signal_w / (cfg.sinr_eff * (interference_w + noise_w));
    Ok(cfg.bandwidth_eff * sinr.ln_1p() / std::f64::consts::LN_2)
}

/// Per-link radio quantities for one realization. Rows are stations, columns users.
///
/// `demand[(i, j)]` is the bandwidth station `i` must reserve to carry user
/// `j`'s rate, or `+∞` when the link has zero spectral efficiency.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkMatrix {
    rx_power_w: Option<Matrix>,
    spec_eff: Matrix,
    demand: Matrix,
    rates: Vec<f64>,
}

impl LinkMatrix {
    /// Builds directly from a spectral-efficiency matrix; used for hand-made
    /// and synthetic instances where no propagation model is involved.
    pub fn from_spectral_efficiency(spec_eff: Matrix, rates: Vec<f64>) -> Result<Self> {
        if spec_eff.cols() != rates.len() {
            return Err(Error::invalid(format!(
                "{} users in the efficiency matrix but {} rates",
                spec_eff.cols(),
                rates.len()
            )));
        }
        if let Some(((i, j), v)) = spec_eff.iter().find(|(_, v)| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!(
                "spectral efficiency ({i}, {j}) = {v} is not a finite non-negative number"
            )));
        }
        if rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::invalid("rates must be positive"));
        }
        let demand = Matrix::from_fn(spec_eff.rows(), spec_eff.cols(), |i, j| {
            let w = spec_eff[(i, j)];
            if w > 0.0 {
                rates[j] / w
            } else {
                f64::INFINITY
            }
        });
        Ok(Self {
            rx_power_w: None,
            spec_eff,
            demand,
            rates,
        })
    }

    pub fn num_stations(&self) -> usize {
        self.spec_eff.rows()
    }

    pub fn num_users(&self) -> usize {
        self.spec_eff.cols()
    }

    pub fn rx_power_w(&self) -> Option<&Matrix> {
        self.rx_power_w.as_ref()
    }

    pub fn spec_eff(&self) -> &Matrix {
        &self.spec_eff
    }

    pub fn demand(&self) -> &Matrix {
        &self.demand
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Whether link `(i, j)` can carry traffic at all.
    pub fn admitted(&self, station: usize, user: usize) -> bool {
        self.demand[(station, user)].is_finite()
    }
}

/// Computes received powers, worst-case-interference spectral efficiencies and
/// bandwidth demands for every station–user pair. `shadow_db` is
/// `stations × users`.
pub fn build_link_matrix(
    topology: &NetworkTopology,
    users: &UserSnapshot,
    cfg: &RadioConfig,
    shadow_db: &Matrix,
) -> Result<LinkMatrix> {
    cfg.validate()?;
    let (m, n) = (topology.len(), users.len());
    if m == 0 || n == 0 {
        return Err(Error::invalid("need at least one station and one user"));
    }
    if shadow_db.rows() != m || shadow_db.cols() != n {
        return Err(Error::invalid(format!(
            "shadowing is {}x{}, expected {m}x{n}",
            shadow_db.rows(),
            shadow_db.cols()
        )));
    }

    let mut rx = Matrix::zeros(m, n);
    for (j, user) in users.users().iter().enumerate() {
        for i in 0..m {
            rx[(i, j)] =
                received_power_w(topology.distance(i, user.position), shadow_db[(i, j)], cfg)?;
        }
    }

    let noise = cfg.noise_power_w();
    let mut spec_eff = Matrix::zeros(m, n);
    for j in 0..n {
        let total: f64 = (0..m).map(|i| rx[(i, j)]).sum();
        for i in 0..m {
            // every other station is assumed to transmit
            let interference = (total - rx[(i, j)]).max(0.0);
            spec_eff[(i, j)] = spectral_efficiency(rx[(i, j)], interference, noise, cfg)?;
        }
    }

    let mut link = LinkMatrix::from_spectral_efficiency(spec_eff, users.rates())?;
    link.rx_power_w = Some(rx);
    Ok(link)
}
