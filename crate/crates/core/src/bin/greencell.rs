use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use greencell::config::{Overrides, RunConfig};
use greencell::harness::{self, FailureKind, ValidateOptions};
use greencell::Error;

/// Base-station switch-off by reweighted linear programming.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated mean user counts for a sweep.
    #[arg(long, global = true, value_delimiter = ',')]
    lambda_list: Option<Vec<f64>>,
    #[arg(long, global = true)]
    realizations: Option<usize>,
    /// Add the exhaustive optimum to sweeps (at most 6 stations).
    #[arg(long, global = true)]
    enable_bruteforce: bool,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one snapshot; writes the trace and the assignment.
    Solve {
        /// Also write the first reweighted LP in LP format.
        #[arg(long)]
        dump_lp: bool,
    },
    /// Compare all solvers over load levels and realizations.
    Sweep,
    /// Run the invariant checks.
    Validate {
        /// Multiply every threshold by this factor (below 1 is stricter).
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
        #[arg(long, hide = true)]
        corrupt_gradient: bool,
    },
    /// Write the configured topology and user snapshot to text files.
    Generate,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible(_) => 2,
        Error::SolverFailure(_) => 3,
        Error::Config(_) | Error::Parse { .. } | Error::SizeLimit(_) | Error::InvalidInput(_) => 4,
        Error::Io(_) => 1,
    }
}

fn load(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: common.seed,
        lambda_list: common.lambda_list.clone(),
        realizations: common.realizations,
        brute_force: common.enable_bruteforce,
        out: common.out.clone(),
    });
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8, Error> {
    let cfg = load(&cli.common)?;
    match cli.command {
        Command::Solve { dump_lp } => {
            let r = harness::cmd_solve(&cfg, dump_lp)?;
            println!(
                "{} stations, {} users: {} active ({} W) after {} iterations ({}), {:.3} s",
                r.instance.num_stations(),
                r.instance.num_users(),
                r.result.energy.active_count,
                r.result.energy.total_power_w,
                r.result.trace.iterations_used,
                r.result.trace.termination,
                r.seconds
            );
            for f in &r.files {
                println!("wrote {}", f.display());
            }
            Ok(0)
        }
        Command::Sweep => {
            let r = harness::cmd_sweep(&cfg)?;
            for l in &r.levels {
                let m = |s: Option<harness::Stat>| s.map_or("-".into(), |s| format!("{:.2}", s.mean));
                println!(
                    "lambda {}: mm {} greedy_switchoff {} nearest {} brute_force {} ({} failed runs)",
                    l.lambda,
                    m(l.mm),
                    m(l.greedy_switchoff),
                    m(l.nearest),
                    m(l.brute_force),
                    l.failures
                );
            }
            for f in &r.files {
                println!("wrote {}", f.display());
            }
            match r.first_failure() {
                None => Ok(0),
                Some((run, solver, (kind, msg))) => {
                    eprintln!("lambda {} realization {}: {solver}: {msg}", run.lambda, run.realization);
                    Ok(match kind {
                        FailureKind::Infeasible => 2,
                        FailureKind::SolverFailure => 3,
                        FailureKind::SizeLimit => 4,
                        FailureKind::Other => 1,
                    })
                }
            }
        }
        Command::Validate {
            tolerance_scale,
            corrupt_gradient,
        } => {
            let opts = ValidateOptions {
                tolerance_scale,
                corrupt_gradient,
                ..ValidateOptions::default()
            };
            let checks = harness::cmd_validate(&cfg, &opts)?;
            for c in &checks {
                println!("{c}");
            }
            Ok(if checks.iter().all(|c| c.passed) { 0 } else { 1 })
        }
        Command::Generate => {
            for f in harness::cmd_generate(&cfg)? {
                println!("wrote {}", f.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_kinds_map_to_documented_codes() {
        assert_eq!(exit_code(&Error::Infeasible("x".into())), 2);
        assert_eq!(exit_code(&Error::SolverFailure("x".into())), 3);
        assert_eq!(exit_code(&Error::Config("x".into())), 4);
        assert_eq!(exit_code(&Error::SizeLimit("x".into())), 4);
        assert_eq!(
            exit_code(&Error::Parse {
                path: "f".into(),
                line: 1,
                msg: "x".into()
            }),
            4
        );
    }
}
