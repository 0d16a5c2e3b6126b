//! Majorization-minimization over the log-relaxed row-sparsity objective
//!
//! ```text
//! f(w) = Σ_i ln(ε + Σ_j w_ij)
//! ```
//!
//! on the relaxed assignment polytope. `f` is concave, so its tangent plane at
//! the current iterate majorizes it; minimizing that plane is an LP whose cost
//! for every variable of station `i` is `1 / (ε + row_sum_i)`. Lightly loaded
//! stations become expensive and empty out over the iterations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::{self, AssignmentLp, Basis, LpStatus};
use crate::radio::LinkMatrix;
use crate::scenario::{NetworkTopology, UserSnapshot};

/// Row sum above which a station counts as active in a relaxed iterate.
pub const ACTIVITY_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmConfig {
    /// Smoothing `ε` inside the logarithm.
    pub epsilon: f64,
    /// Stop once one step improves the objective by less than this.
    pub epsilon_star: f64,
    pub max_iters: usize,
    /// Ignore the tolerance test and always take `max_iters` steps.
    pub run_all_iterations: bool,
    /// Keep every iterate in the trace.
    pub retain_iterates: bool,
}

impl Default for MmConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            epsilon_star: 1e-3,
            max_iters: 20,
            run_all_iterations: false,
            retain_iterates: false,
        }
    }
}

impl MmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if !(self.epsilon_star > 0.0 && self.epsilon_star.is_finite()) {
            return Err(Error::invalid("epsilon_star must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// Relaxed connection variables, `w[i + M·j]` for station `i` and user `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxedAssignment {
    num_stations: usize,
    num_users: usize,
    w: Vec<f64>,
}

impl RelaxedAssignment {
    pub fn new(num_stations: usize, num_users: usize, w: Vec<f64>) -> Result<Self> {
        if w.len() != num_stations * num_users {
            return Err(Error::invalid(format!(
                "relaxed assignment has {} entries, expected {}",
                w.len(),
                num_stations * num_users
            )));
        }
        Ok(Self {
            num_stations,
            num_users,
            w,
        })
    }

    pub fn num_stations(&self) -> usize {
        self.num_stations
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn get(&self, station: usize, user: usize) -> f64 {
        self.w[station + self.num_stations * user]
    }

    /// Station loads `s_iᵀ w`.
    pub fn row_sums(&self) -> Vec<f64> {
        row_sums(&self.w, self.num_stations, self.num_users)
    }

    pub fn active_count(&self) -> usize {
        self.row_sums()
            .iter()
            .filter(|&&s| s > ACTIVITY_THRESHOLD)
            .count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Tolerance,
    MaxIters,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Tolerance => "tolerance",
            Termination::MaxIters => "max_iters",
        })
    }
}

/// Per-iteration record of a run. Index 0 is the starting point.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveTrace {
    pub objective_per_iter: Vec<f64>,
    pub active_count_per_iter: Vec<usize>,
    pub w_per_iter: Option<Vec<RelaxedAssignment>>,
    /// Number of LP steps taken.
    pub iterations_used: usize,
    pub termination: Termination,
}

fn row_sums(w: &[f64], m: usize, n: usize) -> Vec<f64> {
    assert_eq!(w.len(), m * n, "w must have M·N entries");
    let mut sums = vec![0.0; m];
    for col in w.chunks_exact(m.max(1)).take(n) {
        for (s, v) in sums.iter_mut().zip(col) {
            *s += v;
        }
    }
    sums
}

/// `Σ_i ln(ε + row_sum_i(w))`.
pub fn objective(w: &[f64], epsilon: f64, m: usize, n: usize) -> f64 {
    row_sums(w, m, n).iter().map(|s| (epsilon + s).ln()).sum()
}

/// Gradient of [`objective`]: entry `(i, j)` is `1 / (ε + row_sum_i)`.
pub fn gradient(w: &[f64], epsilon: f64, m: usize, n: usize) -> Vec<f64> {
    let inv: Vec<f64> = row_sums(w, m, n)
        .iter()
        .map(|s| 1.0 / (epsilon + s))
        .collect();
    let mut g = Vec::with_capacity(m * n);
    for _ in 0..n {
        g.extend_from_slice(&inv);
    }
    g
}

/// Tangent-plane majorizer `g(x, y) = f(y) + ∇f(y)ᵀ(x − y)`.
pub fn surrogate(x: &[f64], y: &[f64], epsilon: f64, m: usize, n: usize) -> f64 {
    let grad = gradient(y, epsilon, m, n);
    objective(y, epsilon, m, n)
        + grad
            .iter()
            .zip(x.iter().zip(y))
            .map(|(g, (a, b))| g * (a - b))
            .sum::<f64>()
}

/// `Σ_i ln(1 + |h_i|/ε) / ln(1 + 1/ε)`, which tends to the number of
/// nonzero entries of `h` as `ε → 0`.
pub fn l0_relaxation_value(h: &[f64], epsilon: f64) -> f64 {
    let denom = (1.0 / epsilon).ln_1p();
    h.iter().map(|v| (v.abs() / epsilon).ln_1p()).sum::<f64>() / denom
}

/// Stops once a step gains less than `epsilon_star`. Without a previous
/// value there is nothing to compare.
pub fn has_converged(previous: Option<f64>, current: f64, epsilon_star: f64) -> bool {
    previous.is_some_and(|p| p - current < epsilon_star)
}

/// Feasible starting point: users in index order go to the nearest station
/// (wrap distance) that still has room for them. If the greedy pass strands
/// anyone, any feasible point of the LP is used instead.
pub fn initialize(
    link: &LinkMatrix,
    topology: &NetworkTopology,
    users: &UserSnapshot,
) -> Result<RelaxedAssignment> {
    let (m, n) = (topology.len(), users.len());
    check_shapes(link, topology, users)?;
    if let Some(assigned) = greedy_nearest(link, topology, users) {
        let mut w = vec![0.0; m * n];
        for (j, i) in assigned.into_iter().enumerate() {
            w[i + m * j] = 1.0;
        }
        return RelaxedAssignment::new(m, n, w);
    }
    let lp = AssignmentLp::new(link, &topology.capacities())?;
    let sol = lp::find_feasible_point(&lp)?;
    if sol.status == LpStatus::Infeasible {
        return Err(Error::Infeasible(
            "no assignment satisfies every bandwidth budget".into(),
        ));
    }
    RelaxedAssignment::new(m, n, lp.to_full(&sol.w))
}

/// Nearest-station-with-room assignment, or `None` if some user fits nowhere.
pub(crate) fn greedy_nearest(
    link: &LinkMatrix,
    topology: &NetworkTopology,
    users: &UserSnapshot,
) -> Option<Vec<usize>> {
    let mut residual = topology.capacities();
    let mut assigned = Vec::with_capacity(users.len());
    for (j, user) in users.users().iter().enumerate() {
        let i = topology.by_distance(user.position).into_iter().find(|&i| {
            let d = link.demand()[(i, j)];
            d.is_finite() && d <= residual[i]
        })?;
        residual[i] -= link.demand()[(i, j)];
        assigned.push(i);
    }
    Some(assigned)
}

fn check_shapes(link: &LinkMatrix, topology: &NetworkTopology, users: &UserSnapshot) -> Result<()> {
    if link.num_stations() != topology.len() || link.num_users() != users.len() {
        return Err(Error::invalid("link matrix shape disagrees with topology/users"));
    }
    if topology.is_empty() || users.is_empty() {
        return Err(Error::invalid("need at least one station and one user"));
    }
    Ok(())
}

/// One MM step from `w_n`: solve the reweighted LP and return its optimum.
pub fn mm_step(
    w_n: &RelaxedAssignment,
    link: &LinkMatrix,
    capacities: &[f64],
    epsilon: f64,
) -> Result<RelaxedAssignment> {
    let mut stepper = Stepper::new(link, capacities, epsilon)?;
    stepper.step(w_n)
}

/// Holds the LP across iterations so each solve can start from the previous basis.
struct Stepper {
    lp: AssignmentLp,
    basis: Option<Basis>,
    epsilon: f64,
}

impl Stepper {
    fn new(link: &LinkMatrix, capacities: &[f64], epsilon: f64) -> Result<Self> {
        Ok(Self {
            lp: AssignmentLp::new(link, capacities)?,
            basis: None,
            epsilon,
        })
    }

    fn step(&mut self, w_n: &RelaxedAssignment) -> Result<RelaxedAssignment> {
        let weights: Vec<f64> = w_n
            .row_sums()
            .iter()
            .map(|s| 1.0 / (self.epsilon + s))
            .collect();
        self.lp.set_station_costs(&weights)?;
        let sol = lp::solve_warm(&self.lp, self.basis.as_ref())?;
        if sol.status == LpStatus::Infeasible {
            return Err(Error::Infeasible(
                "reweighted LP became infeasible".into(),
            ));
        }
        self.basis = sol.basis;
        RelaxedAssignment::new(
            w_n.num_stations(),
            w_n.num_users(),
            self.lp.to_full(&sol.w),
        )
    }
}

/// Iterates MM steps from [`initialize`] until the objective stalls or the
/// iteration budget runs out. Hitting the budget is a normal exit.
pub fn run(
    link: &LinkMatrix,
    topology: &NetworkTopology,
    users: &UserSnapshot,
    cfg: &MmConfig,
) -> Result<(RelaxedAssignment, SolveTrace)> {
    cfg.validate()?;
    let w0 = initialize(link, topology, users)?;
    run_from(w0, link, &topology.capacities(), cfg)
}

pub fn run_instance(inst: &Instance, cfg: &MmConfig) -> Result<(RelaxedAssignment, SolveTrace)> {
    run(&inst.link, &inst.topology, &inst.users, cfg)
}

/// MM loop from a caller-supplied feasible start.
pub fn run_from(
    w0: RelaxedAssignment,
    link: &LinkMatrix,
    capacities: &[f64],
    cfg: &MmConfig,
) -> Result<(RelaxedAssignment, SolveTrace)> {
    cfg.validate()?;
    let (m, n) = (w0.num_stations(), w0.num_users());
    let mut stepper = Stepper::new(link, capacities, cfg.epsilon)?;

    let mut w = w0;
    let mut f_prev = objective(w.as_slice(), cfg.epsilon, m, n);
    let mut trace = SolveTrace {
        objective_per_iter: vec![f_prev],
        active_count_per_iter: vec![w.active_count()],
        w_per_iter: cfg.retain_iterates.then(|| vec![w.clone()]),
        iterations_used: 0,
        termination: Termination::MaxIters,
    };

    while trace.iterations_used < cfg.max_iters {
        let next = stepper.step(&w)?;
        let f = objective(next.as_slice(), cfg.epsilon, m, n);
        trace.iterations_used += 1;
        trace.objective_per_iter.push(f);
        trace.active_count_per_iter.push(next.active_count());
        if let Some(iterates) = trace.w_per_iter.as_mut() {
            iterates.push(next.clone());
        }
        w = next;
        if !cfg.run_all_iterations && has_converged(Some(f_prev), f, cfg.epsilon_star) {
            trace.termination = Termination::Tolerance;
            break;
        }
        f_prev = f;
    }
    Ok((w, trace))
}
