//! The linear program solved at every MM step: each user's connection
//! variables sum to one, each station's bandwidth load stays within its
//! budget, and every variable lies in `[0, 1]`.

mod dump;
pub mod simplex;

pub use dump::write_lp_format;
pub use simplex::Basis;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::radio::LinkMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

/// Relaxed assignment LP over the admitted links of a [`LinkMatrix`].
///
/// Variables are ordered like the column-major vectorization of the
/// station × user matrix (user-major, station-minor), skipping links with
/// zero spectral efficiency. Capacity rows are stored scaled by `1 / B_i`.
#[derive(Clone, Debug)]
pub struct AssignmentLp {
    num_stations: usize,
    num_users: usize,
    vars: Vec<(usize, usize)>,
    index: Vec<Option<usize>>,
    demand_hz: Vec<f64>,
    capacity_hz: Vec<f64>,
    cost: Vec<f64>,
    problem: simplex::Problem,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// One entry per LP variable (see [`AssignmentLp::variable`]).
    pub w: Vec<f64>,
    pub objective: f64,
    pub basis: Option<Basis>,
    pub iterations: usize,
}

impl AssignmentLp {
    /// Builds the constraint structure with all costs zero.
    pub fn new(link: &LinkMatrix, capacities: &[f64]) -> Result<Self> {
        let (m, n) = (link.num_stations(), link.num_users());
        if capacities.len() != m {
            return Err(Error::invalid(format!(
                "{} capacities for {m} stations",
                capacities.len()
            )));
        }
        if let Some(b) = capacities.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::invalid(format!("capacity must be positive, got {b}")));
        }

        let mut vars = Vec::new();
        let mut index = vec![None; m * n];
        let mut demand_hz = Vec::new();
        for j in 0..n {
            let before = vars.len();
            for i in 0..m {
                if link.admitted(i, j) {
                    index[i + m * j] = Some(vars.len());
                    vars.push((i, j));
                    demand_hz.push(link.demand()[(i, j)]);
                }
            }
            if vars.len() == before {
                return Err(Error::Infeasible(format!("user {j} has no usable link")));
            }
        }

        let mut columns: Vec<simplex::Column> = vars
            .iter()
            .zip(&demand_hz)
            .map(|(&(i, j), &d)| vec![(j, 1.0), (n + i, d / capacities[i])])
            .collect();
        let mut upper = vec![1.0; vars.len()];
        for i in 0..m {
            columns.push(vec![(n + i, 1.0)]);
            upper.push(f64::INFINITY);
        }
        let problem = simplex::Problem {
            rows: n + m,
            cost: vec![0.0; columns.len()],
            columns,
            upper,
            rhs: vec![1.0; n + m],
        };
        Ok(Self {
            num_stations: m,
            num_users: n,
            cost: vec![0.0; vars.len()],
            vars,
            index,
            demand_hz,
            capacity_hz: capacities.to_vec(),
            problem,
        })
    }

    /// Sets the cost of every variable from a stations × users matrix.
    pub fn set_costs(&mut self, costs: &Matrix) -> Result<()> {
        if costs.rows() != self.num_stations || costs.cols() != self.num_users {
            return Err(Error::invalid("cost matrix shape does not match the LP"));
        }
        let c: Vec<f64> = self.vars.iter().map(|&(i, j)| costs[(i, j)]).collect();
        self.install_costs(c)
    }

    /// Sets a cost per station, shared by all of that station's variables.
    pub fn set_station_costs(&mut self, costs: &[f64]) -> Result<()> {
        if costs.len() != self.num_stations {
            return Err(Error::invalid("one cost per station expected"));
        }
        let c: Vec<f64> = self.vars.iter().map(|&(i, _)| costs[i]).collect();
        self.install_costs(c)
    }

    fn install_costs(&mut self, c: Vec<f64>) -> Result<()> {
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("costs must be finite"));
        }
        // the simplex sees costs normalized to unit max magnitude
        let scale = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let scale = if scale > 0.0 { scale } else { 1.0 };
        for (dst, v) in self.problem.cost.iter_mut().zip(&c) {
            *dst = v / scale;
        }
        self.cost = c;
        Ok(())
    }

    pub fn num_stations(&self) -> usize {
        self.num_stations
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_variables(&self) -> usize {
        self.vars.len()
    }

    pub fn num_equalities(&self) -> usize {
        self.num_users
    }

    pub fn num_inequalities(&self) -> usize {
        self.num_stations
    }

    /// `(station, user)` of variable `k`.
    pub fn variable(&self, k: usize) -> (usize, usize) {
        self.vars[k]
    }

    pub fn variable_index(&self, station: usize, user: usize) -> Option<usize> {
        self.index[station + self.num_stations * user]
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn demand_hz(&self) -> &[f64] {
        &self.demand_hz
    }

    pub fn capacity_hz(&self) -> &[f64] {
        &self.capacity_hz
    }

    pub fn objective(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.cost).map(|(a, b)| a * b).sum()
    }

    /// Expands a per-variable vector to the full column-major `M·N` vector.
    pub fn to_full(&self, w: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.num_stations * self.num_users];
        for (k, &(i, j)) in self.vars.iter().enumerate() {
            full[i + self.num_stations * j] = w[k];
        }
        full
    }

    /// Restricts a full column-major vector to the LP's variables.
    pub fn from_full(&self, full: &[f64]) -> Vec<f64> {
        self.vars
            .iter()
            .map(|&(i, j)| full[i + self.num_stations * j])
            .collect()
    }

    /// Largest violation of any constraint family at `w`, with capacity rows
    /// measured in units of the station budget.
    pub fn max_violation(&self, w: &[f64]) -> f64 {
        let mut user_sum = vec![0.0; self.num_users];
        let mut load = vec![0.0; self.num_stations];
        let mut worst = 0.0f64;
        for (k, &(i, j)) in self.vars.iter().enumerate() {
            let v = w[k];
            worst = worst.max(-v).max(v - 1.0);
            user_sum[j] += v;
            load[i] += self.demand_hz[k] * v / self.capacity_hz[i];
        }
        for s in user_sum {
            worst = worst.max((s - 1.0).abs());
        }
        for l in load {
            worst = worst.max(l - 1.0);
        }
        worst
    }

    fn wrap(&self, s: simplex::Solution) -> LpSolution {
        let w: Vec<f64> = s.x[..self.vars.len()].to_vec();
        let (status, objective) = match s.status {
            simplex::Status::Optimal => (LpStatus::Optimal, self.objective(&w)),
            simplex::Status::Infeasible => (LpStatus::Infeasible, f64::NAN),
        };
        LpSolution {
            status,
            w,
            objective,
            basis: s.basis,
            iterations: s.iterations,
        }
    }
}

/// Builds an assignment LP with per-variable costs taken from `costs`.
pub fn build_lp(link: &LinkMatrix, capacities: &[f64], costs: &Matrix) -> Result<AssignmentLp> {
    let mut lp = AssignmentLp::new(link, capacities)?;
    lp.set_costs(costs)?;
    Ok(lp)
}

/// Optimal basic solution, or `Infeasible` status.
pub fn solve(lp: &AssignmentLp) -> Result<LpSolution> {
    solve_warm(lp, None)
}

/// Like [`solve`], starting from `basis` when it is still primal feasible.
pub fn solve_warm(lp: &AssignmentLp, basis: Option<&Basis>) -> Result<LpSolution> {
    let opts = simplex::Options::for_problem(&lp.problem);
    Ok(lp.wrap(simplex::solve(&lp.problem, basis, opts)?))
}

/// Any feasible point (phase 1 only).
pub fn find_feasible_point(lp: &AssignmentLp) -> Result<LpSolution> {
    let opts = simplex::Options {
        feasibility_only: true,
        ..simplex::Options::for_problem(&lp.problem)
    };
    Ok(lp.wrap(simplex::solve(&lp.problem, None, opts)?))
}
