//! The experiment commands behind the `greencell` binary: solve one snapshot,
//! sweep load levels against the baselines, validate invariants, and export
//! a scenario.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{self, BRUTE_FORCE_MAX_STATIONS};
use crate::config::{realization_seed, RunConfig};
use crate::error::{Error, Result};
use crate::instance::{random_feasible, Instance};
use crate::io;
use crate::lp::{self, AssignmentLp};
use crate::mm::{self, Termination};
use crate::pipeline::{reconfigure, Reconfiguration};
use crate::rounding::{energy_of, BinaryAssignment};
use crate::validate::{self, Check, Thresholds};

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

#[derive(Debug)]
pub struct SolveReport {
    pub instance: Instance,
    pub result: Reconfiguration,
    pub seconds: f64,
    pub files: Vec<PathBuf>,
}

/// Solves the configured snapshot (`mean_users`, `seed`) and writes
///
/// * `trace.csv` — `iteration,objective,active_count`
/// * `assignment.csv` — `user_id,station_id`
/// * `active_stations.csv` — `station_id`
/// * `solve_summary.csv` — one row of run totals
/// * `first_step.lp` — the first reweighted LP, when `dump_lp` is set
///
/// Files contain no timings, so a fixed config reproduces them byte for byte.
pub fn cmd_solve(cfg: &RunConfig, dump_lp: bool) -> Result<SolveReport> {
    cfg.validate()?;
    let seed = cfg.scenario.seed;
    let inst = cfg.instance(cfg.scenario.mean_users, seed)?;
    let dir = &cfg.output.dir;
    create_out(dir)?;
    let mut files = Vec::new();

    if dump_lp && inst.num_users() > 0 {
        let w0 = mm::initialize(&inst.link, &inst.topology, &inst.users)?;
        let weights: Vec<f64> = w0.row_sums().iter().map(|s| 1.0 / (cfg.solver.epsilon + s)).collect();
        let mut lp = AssignmentLp::new(&inst.link, &inst.capacities())?;
        lp.set_station_costs(&weights)?;
        let path = dir.join("first_step.lp");
        let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
        lp::write_lp_format(&lp, &mut f)?;
        files.push(path);
    }

    let start = Instant::now();
    let result = reconfigure(&inst, &cfg.solver)?;
    let seconds = start.elapsed().as_secs_f64();

    let summary = format!(
        "seed,stations,users,iterations,termination,relaxed_active,active_count,energy_w\n{},{},{},{},{},{},{},{}\n",
        seed,
        inst.num_stations(),
        inst.num_users(),
        result.trace.iterations_used,
        result.trace.termination,
        result.relaxed.active_count(),
        result.energy.active_count,
        result.energy.total_power_w
    );
    for (name, text) in [
        ("trace.csv", io::trace_csv(&result.trace)),
        ("assignment.csv", io::assignment_csv(&result.assignment)),
        ("active_stations.csv", io::active_stations_csv(&result.assignment)),
        ("solve_summary.csv", summary),
    ] {
        let path = dir.join(name);
        fs::write(&path, text)?;
        files.push(path);
    }
    Ok(SolveReport {
        instance: inst,
        result,
        seconds,
        files,
    })
}

/// Writes `topology.txt`, `users.txt` and the fully resolved `config.toml`
/// for the configured snapshot. Shadow fading is not stored: it is re-drawn
/// from the seed, so solving the exported files with the same seed gives the
/// same link matrix.
pub fn cmd_generate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let topology = cfg.topology()?;
    let users = cfg.users(&topology, cfg.scenario.mean_users, cfg.scenario.seed)?;
    let dir = &cfg.output.dir;
    create_out(dir)?;
    let (tp, up, cp) = (dir.join("topology.txt"), dir.join("users.txt"), dir.join("config.toml"));
    io::write_topology(&tp, &topology)?;
    io::write_users(&up, &users)?;
    let mut resolved = cfg.clone();
    resolved.scenario.topology_file = Some("topology.txt".into());
    resolved.scenario.users_file = Some("users.txt".into());
    resolved.output.dir = ".".into();
    fs::write(&cp, resolved.to_toml())?;
    Ok(vec![tp, up, cp])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureKind {
    Infeasible,
    SolverFailure,
    SizeLimit,
    Other,
}

impl FailureKind {
    fn of(e: &Error) -> Self {
        match e {
            Error::Infeasible(_) => Self::Infeasible,
            Error::SolverFailure(_) => Self::SolverFailure,
            Error::SizeLimit(_) => Self::SizeLimit,
            _ => Self::Other,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::Infeasible => "infeasible",
            Self::SolverFailure => "solver_failure",
            Self::SizeLimit => "size_limit",
            Self::Other => "error",
        }
    }
}

/// One solver on one snapshot.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub active: Option<usize>,
    pub energy_w: Option<f64>,
    pub seconds: f64,
    pub failure: Option<(FailureKind, String)>,
}

impl Outcome {
    fn timed(inst: &Instance, f: impl FnOnce() -> Result<BinaryAssignment>) -> Self {
        let start = Instant::now();
        let r = f();
        let seconds = start.elapsed().as_secs_f64();
        match r {
            Ok(a) => {
                let e = energy_of(&a, &inst.topology);
                Self {
                    active: Some(e.active_count),
                    energy_w: Some(e.total_power_w),
                    seconds,
                    failure: None,
                }
            }
            Err(e) => Self {
                active: None,
                energy_w: None,
                seconds,
                failure: Some((FailureKind::of(&e), e.to_string())),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    /// Load level (mean user count).
    pub lambda: f64,
    pub realization: usize,
    pub seed: u64,
    pub users: usize,
    pub mm: Outcome,
    pub mm_iterations: Option<usize>,
    pub mm_termination: Option<Termination>,
    pub greedy_switchoff: Outcome,
    pub nearest: Outcome,
    pub brute_force: Option<Outcome>,
}

impl RunRecord {
    pub fn failures(&self) -> impl Iterator<Item = (&'static str, &(FailureKind, String))> {
        [
            ("mm", Some(&self.mm)),
            ("greedy_switchoff", Some(&self.greedy_switchoff)),
            ("nearest", Some(&self.nearest)),
            ("brute_force", self.brute_force.as_ref()),
        ]
        .into_iter()
        .filter_map(|(n, o)| o.and_then(|o| o.failure.as_ref()).map(|f| (n, f)))
    }
}

/// Mean and standard error of the mean (sample std / √count) of the
/// successful runs; `sem` is `None` with fewer than two samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub sem: Option<f64>,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sem = (n > 1).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        Some(Self { mean, sem, count: n })
    }
}

#[derive(Clone, Debug)]
pub struct LevelSummary {
    pub lambda: f64,
    pub runs: usize,
    pub mm: Option<Stat>,
    pub greedy_switchoff: Option<Stat>,
    pub nearest: Option<Stat>,
    pub brute_force: Option<Stat>,
    /// Mean of MM − exact optimum over runs where both succeeded.
    pub mm_gap: Option<Stat>,
    pub mm_energy_w: Option<Stat>,
    pub failures: usize,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub runs: Vec<RunRecord>,
    pub levels: Vec<LevelSummary>,
    pub files: Vec<PathBuf>,
}

impl SweepResult {
    /// First failed solver run, in sweep order.
    pub fn first_failure(&self) -> Option<(&RunRecord, &'static str, &(FailureKind, String))> {
        self.runs
            .iter()
            .find_map(|r| r.failures().next().map(|(n, f)| (r, n, f)))
    }
}

fn run_one(cfg: &RunConfig, lambda: f64, realization: usize) -> Result<RunRecord> {
    let seed = realization_seed(cfg.scenario.seed, realization);
    let inst = cfg.instance(lambda, seed)?;
    let (mut iterations, mut termination) = (None, None);
    let mm = Outcome::timed(&inst, || {
        let r = reconfigure(&inst, &cfg.solver)?;
        iterations = Some(r.trace.iterations_used);
        termination = Some(r.trace.termination);
        Ok(r.assignment)
    });
    let greedy_switchoff = Outcome::timed(&inst, || {
        baselines::greedy_switchoff(&inst.link, &inst.topology, &inst.users)
    });
    let nearest = Outcome::timed(&inst, || {
        baselines::nearest_station_solution(&inst.link, &inst.topology, &inst.users)
    });
    let brute_force = cfg.brute_force.then(|| {
        Outcome::timed(&inst, || {
            baselines::brute_force_optimum(&inst.link, &inst.capacities()).map(|(_, a)| a)
        })
    });
    Ok(RunRecord {
        lambda,
        realization,
        seed,
        users: inst.num_users(),
        mm,
        mm_iterations: iterations,
        mm_termination: termination,
        greedy_switchoff,
        nearest,
        brute_force,
    })
}

fn summarize(lambda: f64, runs: &[&RunRecord]) -> LevelSummary {
    let counts = |pick: &dyn Fn(&RunRecord) -> Option<&Outcome>| -> Option<Stat> {
        let v: Vec<f64> = runs
            .iter()
            .filter_map(|r| pick(r).and_then(|o| o.active))
            .map(|a| a as f64)
            .collect();
        Stat::of(&v)
    };
    let gaps: Vec<f64> = runs
        .iter()
        .filter_map(|r| {
            let b = r.brute_force.as_ref()?.active?;
            Some(r.mm.active? as f64 - b as f64)
        })
        .collect();
    let energy: Vec<f64> = runs.iter().filter_map(|r| r.mm.energy_w).collect();
    LevelSummary {
        lambda,
        runs: runs.len(),
        mm: counts(&|r| Some(&r.mm)),
        greedy_switchoff: counts(&|r| Some(&r.greedy_switchoff)),
        nearest: counts(&|r| Some(&r.nearest)),
        brute_force: counts(&|r| r.brute_force.as_ref()),
        mm_gap: Stat::of(&gaps),
        mm_energy_w: Stat::of(&energy),
        failures: runs.iter().filter(|r| r.failures().next().is_some()).count(),
    }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn runs_csv(runs: &[RunRecord]) -> String {
    let mut out = String::from(
        "lambda,realization,seed,users,mm_active,greedy_switchoff_active,nearest_active,brute_force_active,mm_gap,mm_energy_w,greedy_switchoff_energy_w,nearest_energy_w,mm_iterations,mm_termination,status\n",
    );
    for r in runs {
        let brute = r.brute_force.as_ref().and_then(|o| o.active);
        let gap = r.mm.active.zip(brute).map(|(a, b)| a as i64 - b as i64);
        let status: Vec<String> = r.failures().map(|(n, (k, _))| format!("{n}:{}", k.label())).collect();
        let status = if status.is_empty() { "ok".to_string() } else { status.join(";") };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.lambda,
            r.realization,
            r.seed,
            r.users,
            opt(r.mm.active),
            opt(r.greedy_switchoff.active),
            opt(r.nearest.active),
            opt(brute),
            opt(gap),
            opt(r.mm.energy_w),
            opt(r.greedy_switchoff.energy_w),
            opt(r.nearest.energy_w),
            opt(r.mm_iterations),
            opt(r.mm_termination),
            status
        );
    }
    out
}

fn timing_csv(runs: &[RunRecord]) -> String {
    let mut out = String::from("lambda,realization,mm_s,greedy_switchoff_s,nearest_s,brute_force_s\n");
    for r in runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.lambda,
            r.realization,
            r.mm.seconds,
            r.greedy_switchoff.seconds,
            r.nearest.seconds,
            opt(r.brute_force.as_ref().map(|o| o.seconds))
        );
    }
    out
}

fn summary_csv(levels: &[LevelSummary]) -> String {
    let mut out = String::from(
        "lambda,runs,failures,mm_mean,mm_sem,greedy_switchoff_mean,greedy_switchoff_sem,nearest_mean,nearest_sem,brute_force_mean,brute_force_sem,mm_gap_mean,mm_energy_mean_w\n",
    );
    let mean = |s: Option<Stat>| opt(s.map(|s| s.mean));
    let sem = |s: Option<Stat>| opt(s.and_then(|s| s.sem));
    for l in levels {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            l.lambda,
            l.runs,
            l.failures,
            mean(l.mm),
            sem(l.mm),
            mean(l.greedy_switchoff),
            sem(l.greedy_switchoff),
            mean(l.nearest),
            sem(l.nearest),
            mean(l.brute_force),
            sem(l.brute_force),
            mean(l.mm_gap),
            mean(l.mm_energy_w)
        );
    }
    out
}

/// Every solver on `realizations` snapshots per load level. Realizations run
/// in parallel; results are gathered before anything is written, so the
/// files do not depend on scheduling. Writes
///
/// * `sweep_runs.csv` — one row per (load, realization)
/// * `sweep_summary.csv` — per load: means and standard errors
/// * `sweep_timing.csv` — wall-clock seconds per solver and run
///
/// Solver failures are recorded per run rather than aborting the sweep.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<SweepResult> {
    cfg.validate()?;
    if cfg.brute_force {
        let m = cfg.topology()?.len();
        if m > BRUTE_FORCE_MAX_STATIONS {
            return Err(Error::Config(format!(
                "brute force needs at most {BRUTE_FORCE_MAX_STATIONS} stations, the grid has {m}"
            )));
        }
    }
    let jobs: Vec<(f64, usize)> = cfg
        .load_levels()
        .into_iter()
        .flat_map(|l| (0..cfg.realizations).map(move |r| (l, r)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(l, r)| run_one(cfg, l, r))
        .collect::<Result<Vec<_>>>()?;
    let levels: Vec<LevelSummary> = cfg
        .load_levels()
        .into_iter()
        .enumerate()
        .map(|(k, l)| {
            let rs: Vec<&RunRecord> = runs[k * cfg.realizations..(k + 1) * cfg.realizations].iter().collect();
            summarize(l, &rs)
        })
        .collect();

    let dir = &cfg.output.dir;
    create_out(dir)?;
    let mut files = Vec::new();
    for (name, text) in [
        ("sweep_runs.csv", runs_csv(&runs)),
        ("sweep_summary.csv", summary_csv(&levels)),
        ("sweep_timing.csv", timing_csv(&runs)),
    ] {
        let path = dir.join(name);
        fs::write(&path, text)?;
        files.push(path);
    }
    Ok(SweepResult { runs, levels, files })
}

#[derive(Clone, Copy, Debug)]
pub struct ValidateOptions {
    /// Multiplies every threshold; below 1 is stricter.
    pub tolerance_scale: f64,
    /// Negative control: validate a deliberately wrong gradient.
    pub corrupt_gradient: bool,
    /// Random instances in the descent check, besides the configured snapshot.
    pub random_instances: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            tolerance_scale: 1.0,
            corrupt_gradient: false,
            random_instances: 20,
        }
    }
}

/// Runs the invariant suite seeded from the config.
pub fn cmd_validate(cfg: &RunConfig, opts: &ValidateOptions) -> Result<Vec<Check>> {
    cfg.validate()?;
    if !(opts.tolerance_scale > 0.0 && opts.tolerance_scale.is_finite()) {
        return Err(Error::Config("tolerance scale must be positive".into()));
    }
    let th = Thresholds::scaled(opts.tolerance_scale);
    let seed = cfg.scenario.seed;
    let eps = cfg.solver.epsilon;

    let gradient = if opts.corrupt_gradient {
        let bad = |w: &[f64], e: f64, m: usize, n: usize| {
            let mut g = mm::gradient(w, e, m, n);
            g[0] *= 1.0 + 1e-3;
            g
        };
        validate::gradient_check_with(seed, 100, eps, 1e-6, th.gradient_rel, &bad)
    } else {
        validate::gradient_check(seed, 100, eps, 1e-6, th.gradient_rel)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances = vec![cfg.instance(cfg.scenario.mean_users, seed)?];
    for k in 0..opts.random_instances {
        let m = rng.random_range(2..=10);
        let n = rng.random_range(4..=40);
        instances.push(random_feasible(seed.wrapping_add(k as u64), m, n)?);
    }
    let descent = validate::descent_check(&instances, &cfg.solver, th.descent_slack);
    let oracle = validate::lp_oracle_check(seed, 200, 8, &th)?;
    let l0 = validate::l0_limit_check(seed, 20, &th);
    Ok(vec![gradient, descent, oracle, l0])
}
