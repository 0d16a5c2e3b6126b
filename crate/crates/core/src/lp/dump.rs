use std::io::Write;

use super::AssignmentLp;
use crate::error::Result;

const TERMS_PER_LINE: usize = 6;

/// Writes the LP in CPLEX LP text format. Variable `w_i_j` connects station
/// `i` to user `j`; capacity rows are scaled so the right-hand side is 1.
pub fn write_lp_format(lp: &AssignmentLp, out: &mut impl Write) -> Result<()> {
    writeln!(
        out,
        "\\ assignment LP: {} stations, {} users, {} variables",
        lp.num_stations(),
        lp.num_users(),
        lp.num_variables()
    )?;
    writeln!(out, "Minimize")?;
    let terms: Vec<(f64, usize)> = lp.cost().iter().copied().zip(0..).collect();
    write_row(out, lp, " obj:", &terms)?;
    writeln!(out)?;

    writeln!(out, "Subject To")?;
    let mut per_user: Vec<Vec<(f64, usize)>> = vec![Vec::new(); lp.num_users()];
    let mut per_station: Vec<Vec<(f64, usize)>> = vec![Vec::new(); lp.num_stations()];
    for k in 0..lp.num_variables() {
        let (i, j) = lp.variable(k);
        per_user[j].push((1.0, k));
        per_station[i].push((lp.demand_hz()[k] / lp.capacity_hz()[i], k));
    }
    for (j, terms) in per_user.iter().enumerate() {
        write_row(out, lp, &format!(" user_{j}:"), terms)?;
        writeln!(out, " = 1")?;
    }
    for (i, terms) in per_station.iter().enumerate() {
        if terms.is_empty() {
            continue;
        }
        write_row(out, lp, &format!(" cap_{i}:"), terms)?;
        writeln!(out, " <= 1")?;
    }

    writeln!(out, "Bounds")?;
    for k in 0..lp.num_variables() {
        writeln!(out, " 0 <= {} <= 1", name(lp, k))?;
    }
    writeln!(out, "End")?;
    Ok(())
}

fn name(lp: &AssignmentLp, k: usize) -> String {
    let (i, j) = lp.variable(k);
    format!("w_{i}_{j}")
}

fn write_row(
    out: &mut impl Write,
    lp: &AssignmentLp,
    label: &str,
    terms: &[(f64, usize)],
) -> Result<()> {
    write!(out, "{label}")?;
    for (n, &(coef, k)) in terms.iter().enumerate() {
        if n > 0 && n % TERMS_PER_LINE == 0 {
            write!(out, "\n   ")?;
        }
        let sign = if coef < 0.0 || (coef == 0.0 && coef.is_sign_negative()) {
            '-'
        } else {
            '+'
        };
        write!(out, " {sign} {} {}", coef.abs(), name(lp, k))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::radio::LinkMatrix;

    #[test]
    fn dump_has_all_sections() {
        let se = Matrix::from_rows(vec![vec![1.0, 2.0], vec![0.5, 0.0]]).unwrap();
        let link = LinkMatrix::from_spectral_efficiency(se, vec![1.0, 1.0]).unwrap();
        let mut lp = AssignmentLp::new(&link, &[4.0, 2.0]).unwrap();
        lp.set_station_costs(&[1.0, 0.5]).unwrap();
        let mut buf = Vec::new();
        write_lp_format(&lp, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("Minimize\n obj: + 1 w_0_0 + 0.5 w_1_0 + 1 w_0_1"));
        assert!(text.contains(" user_1: + 1 w_0_1 = 1"));
        assert!(text.contains(" cap_0: + 0.25 w_0_0 + 0.125 w_0_1 <= 1"));
        assert!(text.contains(" cap_1: + 1 w_1_0 <= 1"));
        assert!(!text.contains("w_1_1"));
        assert!(text.trim_end().ends_with("End"));
    }
}
