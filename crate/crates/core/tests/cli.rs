use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn work_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn greencell(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_greencell"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn read(path: PathBuf) -> String {
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Column `name` of the CSV text, one entry per data row.
fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(k).unwrap().to_string()).collect()
}

const DESK: &str = "[scenario]\ngrid_rows = 5\ngrid_cols = 5\nmean_users = 60.0\nlambda_list = [60.0]\n";

#[test]
fn one_station_one_user() {
    let d = work_dir("one");
    write(&d, "c.toml", "[scenario]\ngrid_rows = 1\ngrid_cols = 1\nmean_users = 1.0\nfixed_user_count = true\n");
    let o = greencell(&d, &["solve", "--config", "c.toml", "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read(d.join("o/solve_summary.csv"));
    assert_eq!(column(&summary, "active_count"), ["1"]);
    assert_eq!(column(&summary, "energy_w"), ["400"]);
    assert_eq!(read(d.join("o/assignment.csv")), "user_id,station_id\n0,0\n");
    assert_eq!(read(d.join("o/active_stations.csv")), "station_id\n0\n");
}

#[test]
fn default_config_stays_within_iteration_budget() {
    let d = work_dir("default");
    let o = greencell(&d, &["solve", "--out", "o"]);
    assert_eq!(code(&o), 0);
    let trace = read(d.join("o/trace.csv"));
    let iters = column(&trace, "iteration");
    assert!(iters.len() - 1 <= 20);
    assert_eq!(iters[0], "0");
    let f: Vec<f64> = column(&trace, "objective").iter().map(|v| v.parse().unwrap()).collect();
    assert!(f.windows(2).all(|p| p[1] <= p[0] + 1e-8));
}

#[test]
fn repeated_solve_is_byte_identical() {
    let d = work_dir("repeat");
    write(&d, "c.toml", DESK);
    for out in ["a", "b"] {
        assert_eq!(code(&greencell(&d, &["solve", "--config", "c.toml", "--seed", "5", "--out", out])), 0);
    }
    for f in ["trace.csv", "assignment.csv", "active_stations.csv", "solve_summary.csv"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
    assert_eq!(code(&greencell(&d, &["solve", "--config", "c.toml", "--seed", "6", "--out", "c"])), 0);
    assert_ne!(read(d.join("a/assignment.csv")), read(d.join("c/assignment.csv")));
}

#[test]
fn exit_codes() {
    let d = work_dir("codes");
    assert_eq!(code(&greencell(&d, &["solve", "--config", "missing.toml"])), 4);
    write(&d, "typo.toml", "[scenario]\ngird_rows = 3\n");
    assert_eq!(code(&greencell(&d, &["solve", "--config", "typo.toml"])), 4);
    write(&d, "zero.toml", "realizations = 0\n");
    assert_eq!(code(&greencell(&d, &["sweep", "--config", "zero.toml"])), 4);
    assert_eq!(code(&greencell(&d, &["sweep", "--enable-bruteforce", "--realizations", "1"])), 4);
    assert_eq!(code(&greencell(&d, &["nonsense"])), 4);
    write(
        &d,
        "overload.toml",
        "[scenario]\ngrid_rows = 1\ngrid_cols = 1\nmean_users = 5.0\nfixed_user_count = true\nrate_bps = 1e9\n",
    );
    let o = greencell(&d, &["solve", "--config", "overload.toml", "--out", "o"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn single_point_sweep_matches_solve() {
    let d = work_dir("degenerate");
    write(&d, "c.toml", DESK);
    assert_eq!(code(&greencell(&d, &["solve", "--config", "c.toml", "--out", "s"])), 0);
    assert_eq!(code(&greencell(&d, &["sweep", "--config", "c.toml", "--realizations", "1", "--out", "w"])), 0);
    let solve = read(d.join("s/solve_summary.csv"));
    let runs = read(d.join("w/sweep_runs.csv"));
    assert_eq!(column(&runs, "mm_active"), column(&solve, "active_count"));
    assert_eq!(column(&runs, "mm_iterations"), column(&solve, "iterations"));
    assert_eq!(column(&runs, "users"), column(&solve, "users"));
    let summary = read(d.join("w/sweep_summary.csv"));
    assert_eq!(column(&summary, "mm_sem"), [""]);
}

#[test]
fn small_sweep_with_brute_force_fills_gaps() {
    let d = work_dir("brute");
    write(
        &d,
        "c.toml",
        "realizations = 4\n[scenario]\ngrid_rows = 2\ngrid_cols = 3\nmean_users = 8.0\nfixed_user_count = true\nlambda_list = [4.0, 8.0]\n",
    );
    let o = greencell(&d, &["sweep", "--config", "c.toml", "--enable-bruteforce", "--out", "w"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let runs = read(d.join("w/sweep_runs.csv"));
    let brute = column(&runs, "brute_force_active");
    let gap = column(&runs, "mm_gap");
    assert_eq!(brute.len(), 8);
    for (b, g) in brute.iter().zip(&gap) {
        assert!(!b.is_empty() && !g.is_empty());
        assert!(g.parse::<i64>().unwrap() >= 0);
    }
    let summary = read(d.join("w/sweep_summary.csv"));
    assert!(column(&summary, "mm_gap_mean").iter().all(|v| !v.is_empty()));
    assert!(d.join("w/sweep_timing.csv").exists());
}

#[test]
fn validate_suite_and_controls() {
    let d = work_dir("validate");
    write(&d, "c.toml", DESK);
    let ok = greencell(&d, &["validate", "--config", "c.toml"]);
    let text = String::from_utf8_lossy(&ok.stdout);
    assert_eq!(code(&ok), 0, "{text}");
    for name in ["gradient", "monotone_descent", "lp_oracle", "l0_limit"] {
        assert!(text.contains(&format!("PASS {name}")), "{text}");
    }

    let bad = greencell(&d, &["validate", "--config", "c.toml", "--corrupt-gradient"]);
    let text = String::from_utf8_lossy(&bad.stdout);
    assert_eq!(code(&bad), 1);
    assert!(text.contains("FAIL gradient"), "{text}");
    assert!(text.contains("PASS lp_oracle"), "{text}");

    let strict = greencell(&d, &["validate", "--config", "c.toml", "--tolerance-scale", "1e-6"]);
    let text = String::from_utf8_lossy(&strict.stdout);
    assert!(text.contains("threshold 1.000e-12"), "{text}");
    assert!(text.contains("FAIL gradient"), "{text}");
}

#[test]
fn generated_scenario_solves_identically() {
    let d = work_dir("generate");
    write(&d, "c.toml", DESK);
    assert_eq!(code(&greencell(&d, &["generate", "--config", "c.toml", "--seed", "3", "--out", "g"])), 0);
    assert_eq!(read(d.join("g/topology.txt")).lines().count(), 2 + 25);
    assert_eq!(code(&greencell(&d, &["solve", "--config", "c.toml", "--seed", "3", "--out", "a"])), 0);
    assert_eq!(code(&greencell(&d, &["solve", "--config", "g/config.toml", "--out", "b"])), 0);
    for f in ["trace.csv", "assignment.csv"] {
        assert_eq!(read(d.join("a").join(f)), read(d.join("b").join(f)), "{f}");
    }
}

#[test]
fn lp_dump_is_written_on_request() {
    let d = work_dir("dump");
    write(&d, "c.toml", DESK);
    assert_eq!(code(&greencell(&d, &["solve", "--config", "c.toml", "--dump-lp", "--out", "o"])), 0);
    let lp = read(d.join("o/first_step.lp"));
    assert!(lp.contains("Minimize") && lp.contains("Subject To") && lp.trim_end().ends_with("End"));
}
