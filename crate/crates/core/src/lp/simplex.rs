//! Bounded-variable revised simplex on `A x = b, 0 ≤ x ≤ u`.
//!
//! Two phases with one artificial per row. Basis inverse is kept explicitly
//! and refreshed by Gauss-Jordan every `REFACTOR_EVERY` pivots. Pricing is
//! Dantzig's rule, switching to Bland's lowest-index rule after a run of
//! degenerate pivots.

use crate::error::{Error, Result};

const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-8;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_RUN: usize = 50;

/// Sparse column `(row, coefficient)` pairs.
pub type Column = Vec<(usize, f64)>;

#[derive(Clone, Debug)]
pub struct Problem {
    pub rows: usize,
    pub columns: Vec<Column>,
    pub cost: Vec<f64>,
    /// Upper bounds; `f64::INFINITY` for unbounded-above variables.
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

/// A simplex basis over structural plus artificial variables, reusable as a
/// warm start for a problem with the same constraint matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    head: Vec<usize>,
    at_upper: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub status: Status,
    /// Structural variable values; meaningless when infeasible.
    pub x: Vec<f64>,
    pub objective: f64,
    pub basis: Option<Basis>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub max_iterations: usize,
    /// Stop after phase 1 with any feasible point.
    pub feasibility_only: bool,
}

impl Options {
    pub fn for_problem(p: &Problem) -> Self {
        Self {
            max_iterations: 20 * (p.rows + p.columns.len()) + 10_000,
            feasibility_only: false,
        }
    }
}

pub fn solve(p: &Problem, start: Option<&Basis>, opts: Options) -> Result<Solution> {
    check(p)?;
    let mut t = Tableau::new(p);
    let mut warm = false;
    if let Some(b) = start {
        if !opts.feasibility_only && t.load_basis(b)? {
            warm = true;
        } else {
            t = Tableau::new(p);
        }
    }
    if !warm {
        t.run(Phase::One, opts.max_iterations)?;
        let infeasibility: f64 = (t.n..t.total).map(|j| t.x[j]).sum();
        if infeasibility > PHASE1_TOL * (1.0 + p.rows as f64) {
            return Ok(Solution {
                status: Status::Infeasible,
                x: t.x[..t.n].to_vec(),
                objective: f64::NAN,
                basis: None,
                iterations: t.iterations,
            });
        }
        t.freeze_artificials();
    }
    if !opts.feasibility_only {
        t.run(Phase::Two, opts.max_iterations)?;
    }
    Ok(t.finish())
}

fn check(p: &Problem) -> Result<()> {
    let n = p.columns.len();
    if p.cost.len() != n || p.upper.len() != n || p.rhs.len() != p.rows {
        return Err(Error::invalid("LP dimensions disagree"));
    }
    for (j, col) in p.columns.iter().enumerate() {
        if !(p.upper[j] >= 0.0) {
            return Err(Error::invalid(format!("variable {j} has negative upper bound")));
        }
        if !p.cost[j].is_finite() {
            return Err(Error::invalid(format!("variable {j} has non-finite cost")));
        }
        if col.iter().any(|&(r, a)| r >= p.rows || !a.is_finite()) {
            return Err(Error::invalid(format!("column {j} is malformed")));
        }
    }
    if p.rhs.iter().any(|b| !b.is_finite()) {
        return Err(Error::invalid("non-finite right-hand side"));
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

const NONBASIC: usize = usize::MAX;

struct Tableau<'a> {
    p: &'a Problem,
    m: usize,
    n: usize,
    total: usize,
    /// Artificial column for row r is `art[r].1 · e_r`.
    art: Vec<(usize, f64)>,
    upper: Vec<f64>,
    x: Vec<f64>,
    head: Vec<usize>,
    pos: Vec<usize>,
    at_upper: Vec<bool>,
    binv: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
}

impl<'a> Tableau<'a> {
    fn new(p: &'a Problem) -> Self {
        let m = p.rows;
        let n = p.columns.len();
        let total = n + m;
        let art: Vec<(usize, f64)> = (0..m)
            .map(|r| (r, if p.rhs[r] < 0.0 { -1.0 } else { 1.0 }))
            .collect();
        let mut upper = p.upper.clone();
        upper.extend(std::iter::repeat_n(f64::INFINITY, m));
        let mut t = Self {
            p,
            m,
            n,
            total,
            art,
            upper,
            x: vec![0.0; total],
            head: (n..total).collect(),
            pos: vec![NONBASIC; total],
            at_upper: vec![false; total],
            binv: vec![0.0; m * m],
            iterations: 0,
            since_refactor: 0,
        };
        // Crash: a slack-like column (single positive entry, no upper bound)
        // replaces the artificial of its row.
        for (j, col) in p.columns.iter().enumerate() {
            if let [(r, a)] = col.as_slice() {
                let r = *r;
                if *a > 0.0 && p.upper[j].is_infinite() && p.rhs[r] >= 0.0 && t.head[r] >= n {
                    t.head[r] = j;
                }
            }
        }
        for (r, &j) in t.head.iter().enumerate() {
            t.pos[j] = r;
        }
        // the crash basis is diagonal, so inverting cannot fail
        t.refactor().expect("diagonal crash basis");
        t
    }

    fn column(&self, j: usize) -> &[(usize, f64)] {
        if j < self.n {
            &self.p.columns[j]
        } else {
            std::slice::from_ref(&self.art[j - self.n])
        }
    }

    fn freeze_artificials(&mut self) {
        for j in self.n..self.total {
            self.upper[j] = 0.0;
            if self.pos[j] == NONBASIC {
                self.x[j] = 0.0;
                self.at_upper[j] = false;
            }
        }
    }

    /// Installs `b` and checks primal feasibility; `Ok(false)` means the
    /// caller should cold-start instead.
    fn load_basis(&mut self, b: &Basis) -> Result<bool> {
        if b.head.len() != self.m || b.at_upper.len() != self.total {
            return Ok(false);
        }
        self.freeze_artificials();
        self.head.clone_from(&b.head);
        self.pos.fill(NONBASIC);
        for (r, &j) in self.head.iter().enumerate() {
            if j >= self.total || self.pos[j] != NONBASIC {
                return Ok(false);
            }
            self.pos[j] = r;
        }
        for j in 0..self.total {
            if self.pos[j] == NONBASIC {
                let up = b.at_upper[j] && self.upper[j].is_finite();
                self.at_upper[j] = up;
                self.x[j] = if up { self.upper[j] } else { 0.0 };
            }
        }
        if self.refactor().is_err() {
            return Ok(false);
        }
        let feasible = self.head.iter().all(|&j| {
            self.x[j] >= -FEAS_TOL && self.x[j] <= self.upper[j] + FEAS_TOL
        });
        Ok(feasible)
    }

    /// Rebuilds the basis inverse from scratch and recomputes basic values.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (r, &j) in self.head.iter().enumerate() {
            for &(i, v) in self.column(j) {
                a[i * m + r] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let piv = (c..m)
                .max_by(|&x, &y| a[x * m + c].abs().total_cmp(&a[y * m + c].abs()))
                .unwrap_or(c);
            if a[piv * m + c].abs() < 1e-12 {
                return Err(Error::SolverFailure("singular basis".into()));
            }
            if piv != c {
                for k in 0..m {
                    a.swap(piv * m + k, c * m + k);
                    inv.swap(piv * m + k, c * m + k);
                }
            }
            let d = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = a[i * m + c];
                if f != 0.0 {
                    for k in 0..m {
                        a[i * m + k] -= f * a[c * m + k];
                        inv[i * m + k] -= f * inv[c * m + k];
                    }
                }
            }
        }
        self.binv = inv;
        self.since_refactor = 0;

        let mut resid = self.p.rhs.clone();
        for j in 0..self.total {
            if self.pos[j] == NONBASIC && self.x[j] != 0.0 {
                for &(i, v) in self.column(j) {
                    resid[i] -= v * self.x[j];
                }
            }
        }
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            self.x[self.head[r]] = row.iter().zip(&resid).map(|(a, b)| a * b).sum();
        }
        Ok(())
    }

    fn cost(&self, phase: Phase, j: usize) -> f64 {
        match phase {
            Phase::One => {
                if j >= self.n {
                    1.0
                } else {
                    0.0
                }
            }
            Phase::Two => {
                if j >= self.n {
                    0.0
                } else {
                    self.p.cost[j]
                }
            }
        }
    }

    fn run(&mut self, phase: Phase, max_iterations: usize) -> Result<()> {
        let m = self.m;
        let mut degenerate = 0usize;
        let mut y = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        loop {
            if self.iterations >= max_iterations {
                return Err(Error::SolverFailure(format!(
                    "simplex hit the iteration cap ({max_iterations})"
                )));
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let bland = degenerate >= DEGENERATE_RUN;

            // duals
            y.fill(0.0);
            for r in 0..m {
                let c = self.cost(phase, self.head[r]);
                if c != 0.0 {
                    for (yk, b) in y.iter_mut().zip(&self.binv[r * m..(r + 1) * m]) {
                        *yk += c * b;
                    }
                }
            }

            // pricing
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.total {
                if self.pos[j] != NONBASIC || self.upper[j] == 0.0 {
                    continue;
                }
                let d = self.cost(phase, j)
                    - self.column(j).iter().map(|&(i, v)| y[i] * v).sum::<f64>();
                let improving = if self.at_upper[j] { d > OPT_TOL } else { d < -OPT_TOL };
                if !improving {
                    continue;
                }
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.is_none_or(|(_, best)| d.abs() > best.abs()) {
                    entering = Some((j, d));
                }
            }
            let Some((q, _)) = entering else {
                return Ok(());
            };
            let dir = if self.at_upper[q] { -1.0 } else { 1.0 };

            alpha.fill(0.0);
            for &(i, v) in self.column(q) {
                for r in 0..m {
                    alpha[r] += self.binv[r * m + i] * v;
                }
            }

            // ratio test
            let mut step = self.upper[q];
            let mut leave: Option<usize> = None;
            for r in 0..m {
                let a = dir * alpha[r];
                let j = self.head[r];
                let ratio = if a > PIVOT_TOL {
                    (self.x[j].max(0.0)) / a
                } else if a < -PIVOT_TOL && self.upper[j].is_finite() {
                    (self.upper[j] - self.x[j]).max(0.0) / -a
                } else {
                    continue;
                };
                let take = match leave {
                    None => step.is_infinite() || ratio < step - 1e-12,
                    Some(l) => {
                        ratio < step - 1e-12
                            || (ratio <= step + 1e-12 && self.prefer(r, l, &alpha, bland))
                    }
                };
                if take {
                    step = step.min(ratio);
                    leave = Some(r);
                }
            }
            if step.is_infinite() {
                return Err(Error::SolverFailure("LP is unbounded".into()));
            }

            self.iterations += 1;
            if step <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            for r in 0..m {
                if alpha[r] != 0.0 {
                    let j = self.head[r];
                    self.x[j] -= dir * step * alpha[r];
                }
            }
            match leave {
                None => {
                    // bound flip
                    self.at_upper[q] = !self.at_upper[q];
                    self.x[q] = if self.at_upper[q] { self.upper[q] } else { 0.0 };
                }
                Some(r) => {
                    let out = self.head[r];
                    self.x[q] += dir * step;
                    let to_upper = dir * alpha[r] < 0.0;
                    self.x[out] = if to_upper { self.upper[out] } else { 0.0 };
                    self.at_upper[out] = to_upper;
                    self.pos[out] = NONBASIC;
                    self.head[r] = q;
                    self.pos[q] = r;
                    self.at_upper[q] = false;

                    let piv = alpha[r];
                    let (before, rest) = self.binv.split_at_mut(r * m);
                    let (prow, after) = rest.split_at_mut(m);
                    for v in prow.iter_mut() {
                        *v /= piv;
                    }
                    for (k, row) in before.chunks_exact_mut(m).enumerate() {
                        let f = alpha[k];
                        if f != 0.0 {
                            for (a, b) in row.iter_mut().zip(prow.iter()) {
                                *a -= f * b;
                            }
                        }
                    }
                    for (k, row) in after.chunks_exact_mut(m).enumerate() {
                        let f = alpha[r + 1 + k];
                        if f != 0.0 {
                            for (a, b) in row.iter_mut().zip(prow.iter()) {
                                *a -= f * b;
                            }
                        }
                    }
                    self.since_refactor += 1;
                }
            }
        }
    }

    /// Tie-break between two leaving candidates at (nearly) equal ratio.
    fn prefer(&self, r: usize, current: usize, alpha: &[f64], bland: bool) -> bool {
        let (j, l) = (self.head[r], self.head[current]);
        if bland {
            return j < l;
        }
        let (ar, al) = (alpha[r].abs(), alpha[current].abs());
        ar > al || (ar == al && j < l)
    }

    fn finish(mut self) -> Solution {
        for j in 0..self.n {
            let u = self.upper[j];
            let v = self.x[j];
            self.x[j] = if v < FEAS_TOL {
                v.max(0.0)
            } else if u.is_finite() && v > u - FEAS_TOL {
                v.min(u)
            } else {
                v
            };
        }
        let x = self.x[..self.n].to_vec();
        let objective = x.iter().zip(&self.p.cost).map(|(a, b)| a * b).sum();
        Solution {
            status: Status::Optimal,
            x,
            objective,
            basis: Some(Basis {
                head: self.head,
                at_upper: self.at_upper,
            }),
            iterations: self.iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(rows: usize, columns: Vec<Column>, cost: Vec<f64>, upper: Vec<f64>, rhs: Vec<f64>) -> Problem {
        Problem {
            rows,
            columns,
            cost,
            upper,
            rhs,
        }
    }

    #[test]
    fn picks_cheapest_column() {
        // x0 + x1 = 1, 0 ≤ x ≤ 1, min x0 + 2 x1
        let p = lp(
            1,
            vec![vec![(0, 1.0)], vec![(0, 1.0)]],
            vec![1.0, 2.0],
            vec![1.0, 1.0],
            vec![1.0],
        );
        let s = solve(&p, None, Options::for_problem(&p)).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && s.x[1].abs() < 1e-12);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasibility() {
        // x0 + x1 = 3 with both ≤ 1
        let p = lp(
            1,
            vec![vec![(0, 1.0)], vec![(0, 1.0)]],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![3.0],
        );
        let s = solve(&p, None, Options::for_problem(&p)).unwrap();
        assert_eq!(s.status, Status::Infeasible);
    }

    #[test]
    fn negative_rhs_handled() {
        // -x0 - x1 = -1.5, x ≤ 1, min x0 - x1 → x1 = 1, x0 = 0.5
        let p = lp(
            1,
            vec![vec![(0, -1.0)], vec![(0, -1.0)]],
            vec![1.0, -1.0],
            vec![1.0, 1.0],
            vec![-1.5],
        );
        let s = solve(&p, None, Options::for_problem(&p)).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.x[0] - 0.5).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn warm_start_reuses_basis() {
        let p = lp(
            2,
            vec![
                vec![(0, 1.0), (1, 0.5)],
                vec![(0, 1.0)],
                vec![(1, 1.0)],
            ],
            vec![1.0, 3.0, 0.0],
            vec![1.0, 1.0, f64::INFINITY],
            vec![1.0, 1.0],
        );
        let cold = solve(&p, None, Options::for_problem(&p)).unwrap();
        let again = solve(&p, cold.basis.as_ref(), Options::for_problem(&p)).unwrap();
        assert_eq!(again.iterations, 0);
        assert_eq!(cold.x, again.x);
    }
}
