//! Plain-text exchange formats.
//!
//! Topology and user files hold one record per line after an `extent X Y`
//! line; `#` starts a comment:
//!
//! ```text
//! extent 5000 4330.127018922193
//! # id x_m y_m bandwidth_hz static_power_w
//! 0 0 0 5000000 400
//! ```
//!
//! User records are `id x_m y_m rate_bps`. Ids must run `0, 1, 2, ...` in
//! file order. Numbers are written in shortest round-trip form, so a written
//! file reads back bit-identical.
//!
//! Result tables are comma-separated with a header row.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mm::SolveTrace;
use crate::rounding::BinaryAssignment;
use crate::scenario::{NetworkTopology, Point, Station, User, UserSnapshot};

pub fn topology_text(topology: &NetworkTopology) -> String {
    let e = topology.extent();
    let mut out = format!("extent {} {}\n# id x_m y_m bandwidth_hz static_power_w\n", e.x, e.y);
    for s in topology.stations() {
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            s.id, s.position.x, s.position.y, s.bandwidth_hz, s.static_power_w
        );
    }
    out
}

pub fn users_text(users: &UserSnapshot) -> String {
    let e = users.extent();
    let mut out = format!("extent {} {}\n# id x_m y_m rate_bps\n", e.x, e.y);
    for u in users.users() {
        let _ = writeln!(out, "{} {} {} {}", u.id, u.position.x, u.position.y, u.rate_bps);
    }
    out
}

pub fn write_topology(path: &Path, topology: &NetworkTopology) -> Result<()> {
    Ok(fs::write(path, topology_text(topology))?)
}

pub fn write_users(path: &Path, users: &UserSnapshot) -> Result<()> {
    Ok(fs::write(path, users_text(users))?)
}

struct Records {
    extent: Point,
    rows: Vec<(usize, Vec<f64>)>,
}

fn parse_records(text: &str, path: &Path, fields: usize) -> Result<Records> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut extent = None;
    let mut rows = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        if extent.is_none() {
            if tokens.next() != Some("extent") {
                return Err(err(line_no, "expected `extent X Y` before any record".into()));
            }
            let v = numbers(tokens).map_err(|m| err(line_no, m))?;
            if v.len() != 2 {
                return Err(err(line_no, format!("extent needs 2 numbers, got {}", v.len())));
            }
            extent = Some(Point::new(v[0], v[1]));
            continue;
        }
        let id_tok = tokens.next().unwrap_or_default();
        let id: usize = id_tok
            .parse()
            .map_err(|_| err(line_no, format!("bad id `{id_tok}`")))?;
        if id != rows.len() {
            return Err(err(line_no, format!("expected id {}, got {id}", rows.len())));
        }
        let v = numbers(tokens).map_err(|m| err(line_no, m))?;
        if v.len() != fields {
            return Err(err(line_no, format!("expected {} fields after the id, got {}", fields, v.len())));
        }
        rows.push((line_no, v));
    }
    let extent = extent.ok_or_else(|| err(0, "missing `extent` line".into()))?;
    Ok(Records { extent, rows })
}

fn numbers<'a>(tokens: impl Iterator<Item = &'a str>) -> std::result::Result<Vec<f64>, String> {
    tokens
        .map(|t| t.parse::<f64>().map_err(|_| format!("bad number `{t}`")))
        .collect()
}

fn relabel(path: &Path, e: Error) -> Error {
    match e {
        Error::InvalidInput(msg) => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg,
        },
        other => other,
    }
}

pub fn parse_topology(text: &str, path: &Path) -> Result<NetworkTopology> {
    let r = parse_records(text, path, 4)?;
    let stations = r
        .rows
        .iter()
        .enumerate()
        .map(|(id, (_, v))| Station {
            id,
            position: Point::new(v[0], v[1]),
            bandwidth_hz: v[2],
            static_power_w: v[3],
        })
        .collect();
    NetworkTopology::new(stations, r.extent).map_err(|e| relabel(path, e))
}

pub fn parse_users(text: &str, path: &Path) -> Result<UserSnapshot> {
    let r = parse_records(text, path, 3)?;
    let users = r
        .rows
        .iter()
        .enumerate()
        .map(|(id, (_, v))| User {
            id,
            position: Point::new(v[0], v[1]),
            rate_bps: v[2],
        })
        .collect();
    UserSnapshot::new(users, r.extent).map_err(|e| relabel(path, e))
}

pub fn read_topology(path: &Path) -> Result<NetworkTopology> {
    parse_topology(&fs::read_to_string(path)?, path)
}

pub fn read_users(path: &Path) -> Result<UserSnapshot> {
    parse_users(&fs::read_to_string(path)?, path)
}

/// `iteration,objective,active_count`; iteration 0 is the starting point.
pub fn trace_csv(trace: &SolveTrace) -> String {
    let mut out = String::from("iteration,objective,active_count\n");
    for (k, (f, a)) in trace
        .objective_per_iter
        .iter()
        .zip(&trace.active_count_per_iter)
        .enumerate()
    {
        let _ = writeln!(out, "{k},{f},{a}");
    }
    out
}

/// `user_id,station_id`, one row per user.
pub fn assignment_csv(assignment: &BinaryAssignment) -> String {
    let mut out = String::from("user_id,station_id\n");
    for (j, i) in assignment.assigned_station().iter().enumerate() {
        let _ = writeln!(out, "{j},{i}");
    }
    out
}

/// `station_id`, one row per active station, ascending.
pub fn active_stations_csv(assignment: &BinaryAssignment) -> String {
    let mut out = String::from("station_id\n");
    for i in assignment.active_set() {
        let _ = writeln!(out, "{i}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_hex_grid, sample_users, HotspotSpec};

    #[test]
    fn topology_round_trip_is_exact() {
        let t = generate_hex_grid(3, 4, 500.0, 5e6, 400.0).unwrap();
        let back = parse_topology(&topology_text(&t), Path::new("t")).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn users_round_trip_is_exact() {
        let t = generate_hex_grid(3, 4, 500.0, 5e6, 400.0).unwrap();
        let u = sample_users(7, 30.0, 122e3, &HotspotSpec::default(), t.extent(), false).unwrap();
        let back = parse_users(&users_text(&u), Path::new("u")).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let p = Path::new("f.txt");
        let e = parse_users("extent 10 10\n0 1 1 5\n1 2 x 5\n", p).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse_users("0 1 1 5\n", p).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = parse_users("extent 10 10\n1 1 1 5\n", p).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_users("extent 10 10\n0 11 1 5\n", p).unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        let e = parse_topology("extent 10 10\n0 1 1 5\n", p).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn comments_and_blank_lines() {
        let u = parse_users("# header\n\nextent 10 10 # torus\n0 1 2 3\n", Path::new("u")).unwrap();
        assert_eq!(u.len(), 1);
        assert_eq!(u.users()[0].rate_bps, 3.0);
    }
}
