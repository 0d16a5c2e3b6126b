//! Mapping a fractional relaxed assignment to a binary one without breaking
//! any bandwidth budget, plus energy accounting of the result.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::mm::RelaxedAssignment;
use crate::radio::LinkMatrix;
use crate::scenario::{NetworkTopology, UserSnapshot};

/// Entries within this distance of 0 or 1 count as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Relative budget slack when checking station capacity.
pub const CAPACITY_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryAssignment {
    assigned_station: Vec<usize>,
    active_set: Vec<usize>,
    residual_bandwidth_hz: Vec<f64>,
}

impl BinaryAssignment {
    /// Validates a user → station map against the link demands and budgets.
    pub fn new(assigned_station: Vec<usize>, link: &LinkMatrix, capacities: &[f64]) -> Result<Self> {
        let m = link.num_stations();
        if assigned_station.len() != link.num_users() || capacities.len() != m {
            return Err(Error::invalid("assignment shape disagrees with the link matrix"));
        }
        let mut residual = capacities.to_vec();
        for (j, &i) in assigned_station.iter().enumerate() {
            if i >= m {
                return Err(Error::invalid(format!("user {j} assigned to unknown station {i}")));
            }
            residual[i] -= link.demand()[(i, j)];
        }
        for (i, r) in residual.iter_mut().enumerate() {
            if *r < -CAPACITY_SLACK * capacities[i] || r.is_nan() {
                return Err(Error::invalid(format!(
                    "station {i} is over its bandwidth budget by {} Hz",
                    -*r
                )));
            }
            *r = r.max(0.0);
        }
        let mut active_set = assigned_station.clone();
        active_set.sort_unstable();
        active_set.dedup();
        Ok(Self {
            assigned_station,
            active_set,
            residual_bandwidth_hz: residual,
        })
    }

    pub fn assigned_station(&self) -> &[usize] {
        &self.assigned_station
    }

    /// Stations serving at least one user, ascending.
    pub fn active_set(&self) -> &[usize] {
        &self.active_set
    }

    pub fn active_count(&self) -> usize {
        self.active_set.len()
    }

    pub fn residual_bandwidth_hz(&self) -> &[f64] {
        &self.residual_bandwidth_hz
    }

    pub fn to_relaxed(&self, num_stations: usize) -> RelaxedAssignment {
        let n = self.assigned_station.len();
        let mut w = vec![0.0; num_stations * n];
        for (j, &i) in self.assigned_station.iter().enumerate() {
            w[i + num_stations * j] = 1.0;
        }
        RelaxedAssignment::new(num_stations, n, w).expect("shape is consistent")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyReport {
    pub total_power_w: f64,
    pub active_count: usize,
}

/// Static power drawn by the active stations.
pub fn energy_of(assignment: &BinaryAssignment, topology: &NetworkTopology) -> EnergyReport {
    let stations = topology.stations();
    EnergyReport {
        total_power_w: assignment
            .active_set()
            .iter()
            .map(|&i| stations[i].static_power_w)
            .sum(),
        active_count: assignment.active_count(),
    }
}

struct Placement<'a> {
    link: &'a LinkMatrix,
    capacities: Vec<f64>,
    residual: Vec<f64>,
    served: Vec<usize>,
    assigned: Vec<Option<usize>>,
}

impl<'a> Placement<'a> {
    fn new(link: &'a LinkMatrix, capacities: Vec<f64>) -> Self {
        Self {
            link,
            residual: capacities.clone(),
            capacities,
            served: vec![0; link.num_stations()],
            assigned: vec![None; link.num_users()],
        }
    }

    fn fits(&self, i: usize, j: usize) -> bool {
        let d = self.link.demand()[(i, j)];
        d.is_finite() && d <= self.residual[i] + CAPACITY_SLACK * self.capacities[i]
    }

    fn place(&mut self, i: usize, j: usize) {
        self.residual[i] -= self.link.demand()[(i, j)];
        self.served[i] += 1;
        self.assigned[j] = Some(i);
    }
}

/// Rounds `w` to a binary assignment:
///
/// 1. users whose column is already integral keep their station;
/// 2. remaining positive entries are visited in descending order and a user
///    goes to the first station among them that still has room; a user whose
///    own entries are all full tries the other stations `w` keeps on, best
///    spectral efficiency first;
/// 3. anyone left over switches on the nearest idle station with room, then
///    falls back to the active station with the most spare bandwidth.
///
/// Ties in step 2 go to the lower user index, then the lower station index.
pub fn round_assignment(
    w: &RelaxedAssignment,
    link: &LinkMatrix,
    topology: &NetworkTopology,
    users: &UserSnapshot,
) -> Result<BinaryAssignment> {
    let (m, n) = (topology.len(), users.len());
    if w.num_stations() != m
        || w.num_users() != n
        || link.num_stations() != m
        || link.num_users() != n
    {
        return Err(Error::invalid("relaxed assignment shape disagrees with the instance"));
    }
    let mut p = Placement::new(link, topology.capacities());

    // 1: integral columns
    for j in 0..n {
        let mut one = None;
        let mut integral = true;
        for i in 0..m {
            let v = w.get(i, j);
            if (v - 1.0).abs() <= INTEGRALITY_TOL {
                if one.is_some() {
                    integral = false;
                }
                one = Some(i);
            } else if v.abs() > INTEGRALITY_TOL {
                integral = false;
            }
        }
        if let (true, Some(i)) = (integral, one) {
            // LP-feasible input always fits; arbitrary input may not
            if p.fits(i, j) {
                p.place(i, j);
            }
        }
    }

    // 2: fractional entries, largest first
    let mut entries: Vec<(f64, usize, usize)> = (0..n)
        .filter(|&j| p.assigned[j].is_none())
        .flat_map(|j| (0..m).map(move |i| (i, j)))
        .filter_map(|(i, j)| {
            let v = w.get(i, j);
            (v > INTEGRALITY_TOL).then_some((v, j, i))
        })
        .collect();
    entries.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    for (_, j, i) in entries {
        if p.assigned[j].is_none() && p.fits(i, j) {
            p.place(i, j);
        }
    }
    // 2b: still-unplaced users try the other stations the relaxed solution
    // keeps on, best spectral efficiency first
    let kept: Vec<usize> = w
        .row_sums()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > INTEGRALITY_TOL)
        .map(|(i, _)| i)
        .collect();
    for j in 0..n {
        if p.assigned[j].is_some() {
            continue;
        }
        let best = kept
            .iter()
            .copied()
            .filter(|&i| p.fits(i, j))
            .max_by(|&a, &b| {
                link.spec_eff()[(a, j)]
                    .total_cmp(&link.spec_eff()[(b, j)])
                    .then(b.cmp(&a))
            });
        if let Some(i) = best {
            p.place(i, j);
        }
    }

    // 3: leftovers
    for (j, user) in users.users().iter().enumerate() {
        if p.assigned[j].is_some() {
            continue;
        }
        let idle = topology
            .by_distance(user.position)
            .into_iter()
            .find(|&i| p.served[i] == 0 && p.fits(i, j));
        let target = idle.or_else(|| {
            let mut active: Vec<usize> = (0..m).filter(|&i| p.served[i] > 0).collect();
            active.sort_by(|&a, &b| p.residual[b].total_cmp(&p.residual[a]).then(a.cmp(&b)));
            active.into_iter().find(|&i| p.fits(i, j))
        });
        match target {
            Some(i) => p.place(i, j),
            None => {
                return Err(Error::Infeasible(format!(
                    "no station has room for user {j}"
                )))
            }
        }
    }

    let assigned = p.assigned.into_iter().map(|a| a.expect("every user placed")).collect();
    BinaryAssignment::new(assigned, link, &topology.capacities())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{from_spectral_efficiency, Instance};
    use crate::scenario::{Point, Station};
    use crate::Matrix;

    fn instance(capacities: &[f64], users: &[(f64, f64)], spec_eff: Vec<Vec<f64>>) -> Instance {
        let stations: Vec<(f64, f64)> = (0..capacities.len()).map(|i| (1000.0 * i as f64, 0.0)).collect();
        from_spectral_efficiency(
            &stations,
            capacities,
            users,
            &vec![1.0; users.len()],
            Matrix::from_rows(spec_eff).unwrap(),
        )
        .unwrap()
    }

    fn relaxed(m: usize, n: usize, w: Vec<f64>) -> RelaxedAssignment {
        RelaxedAssignment::new(m, n, w).unwrap()
    }

    #[test]
    fn integral_input_is_untouched() {
        let inst = instance(&[10.0, 10.0], &[(0.0, 0.0); 3], vec![vec![1.0; 3]; 2]);
        let w = relaxed(2, 3, vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        let b = round_assignment(&w, &inst.link, &inst.topology, &inst.users).unwrap();
        assert_eq!(b.assigned_station(), &[0, 1, 0]);
        assert_eq!(b.active_set(), &[0, 1]);
        assert_eq!(b.to_relaxed(2), w);
    }

    #[test]
    fn fractional_user_goes_to_larger_share() {
        let inst = instance(&[10.0, 10.0], &[(0.0, 0.0)], vec![vec![1.0], vec![1.0]]);
        let w = relaxed(2, 1, vec![0.4, 0.6]);
        let b = round_assignment(&w, &inst.link, &inst.topology, &inst.users).unwrap();
        assert_eq!(b.assigned_station(), &[1]);
    }

    #[test]
    fn saturated_station_passes_to_next_share() {
        // Hand trace: user 0 sits fully on station 1 (demand 1.5 of 2.0).
        // User 1 is split 0.6 on station 1 / 0.4 on station 0; station 1 has
        // only 0.5 Hz left for a 1 Hz demand, so user 1 lands on station 0.
        let inst = instance(
            &[5.0, 2.0],
            &[(900.0, 0.0), (500.0, 0.0)],
            vec![vec![1.0, 1.0], vec![1.0 / 1.5, 1.0]],
        );
        let w = relaxed(2, 2, vec![0.0, 1.0, 0.4, 0.6]);
        let b = round_assignment(&w, &inst.link, &inst.topology, &inst.users).unwrap();
        assert_eq!(b.assigned_station(), &[1, 0]);
        assert!((b.residual_bandwidth_hz()[1] - 0.5).abs() < 1e-12);
        assert!((b.residual_bandwidth_hz()[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn leftover_activates_closest_idle_station() {
        // user 1's only positive entry is on a full station
        let inst = instance(
            &[1.0, 5.0, 5.0],
            &[(10.0, 0.0), (1900.0, 0.0)],
            vec![vec![1.0; 2]; 3],
        );
        let w = relaxed(3, 2, vec![1.0, 0.0, 0.0, 0.5, 0.5, 0.0]);
        // station 0 is full after user 0; entries for user 1 are 0.5 on 0 and 0.5 on 1
        let b = round_assignment(&w, &inst.link, &inst.topology, &inst.users).unwrap();
        assert_eq!(b.assigned_station(), &[0, 1]);

        let w = relaxed(3, 2, vec![1.0, 0.0, 0.0, 1.0 - 1e-3, 0.0, 0.0]);
        // column 1 does not sum to one (arbitrary input); only station 0 is
        // positive and it is full, so the nearest idle station (2) is used
        let b = round_assignment(&w, &inst.link, &inst.topology, &inst.users).unwrap();
        assert_eq!(b.assigned_station(), &[0, 2]);
    }

    #[test]
    fn full_shares_move_to_another_kept_station() {
        // Users 0,1 leave 0.5 Hz on stations 0,1; user 2 (split between them,
        // demand 1) fits on neither. Stations 2 and 3 are kept on by users 3,4
        // and both have room; ω(3,2) = 2 beats ω(2,2) = 1. Idle station 4 is
        // nearest to user 2 but is not switched on.
        let mut se = vec![vec![1.0; 5]; 5];
        se[3][2] = 2.0;
        let inst = instance(
            &[1.5, 1.5, 5.0, 5.0, 5.0],
            &[(0.0, 0.0), (1000.0, 0.0), (4000.0, 0.0), (2000.0, 0.0), (3000.0, 0.0)],
            se,
        );
        let e = |i: usize| (0..5).map(|k| if k == i { 1.0 } else { 0.0 }).collect::<Vec<_>>();
        let mut w = Vec::new();
        w.extend(e(0));
        w.extend(e(1));
        w.extend([0.5, 0.5, 0.0, 0.0, 0.0]);
        w.extend(e(2));
        w.extend(e(3));
        let b = round_assignment(&relaxed(5, 5, w), &inst.link, &inst.topology, &inst.users).unwrap();
        assert_eq!(b.assigned_station(), &[0, 1, 3, 2, 3]);
        assert_eq!(b.active_count(), 4);
        assert!((b.residual_bandwidth_hz()[3] - 3.5).abs() < 1e-12);
    }

    #[test]
    fn leftover_falls_back_to_active_station() {
        // idle station 2 is too small; active station 1 has room
        let inst = instance(
            &[1.0, 5.0, 0.5],
            &[(10.0, 0.0), (1100.0, 0.0), (1900.0, 0.0)],
            vec![vec![1.0; 3]; 3],
        );
        let w = relaxed(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.999, 0.0, 0.0]);
        let b = round_assignment(&w, &inst.link, &inst.topology, &inst.users).unwrap();
        assert_eq!(b.assigned_station(), &[0, 1, 1]);
    }

    #[test]
    fn nowhere_to_go_is_infeasible() {
        let inst = instance(&[1.0, 1.0], &[(0.0, 0.0); 3], vec![vec![1.0; 3]; 2]);
        let w = relaxed(2, 3, vec![1.0, 0.0, 0.0, 1.0, 0.5, 0.5]);
        assert!(matches!(
            round_assignment(&w, &inst.link, &inst.topology, &inst.users),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn over_budget_assignment_rejected() {
        let inst = instance(&[1.0, 1.0], &[(0.0, 0.0); 2], vec![vec![1.0; 2]; 2]);
        assert!(BinaryAssignment::new(vec![0, 0], &inst.link, &inst.capacities()).is_err());
        assert!(BinaryAssignment::new(vec![0, 1], &inst.link, &inst.capacities()).is_ok());
    }

    #[test]
    fn energy_cases() {
        let inst = instance(&[10.0, 10.0], &[(0.0, 0.0); 2], vec![vec![1.0; 2]; 2]);
        let b = BinaryAssignment::new(vec![0, 0], &inst.link, &inst.capacities()).unwrap();
        let e = energy_of(&b, &inst.topology);
        assert_eq!((e.total_power_w, e.active_count), (400.0, 1));

        let hetero = NetworkTopology::new(
            vec![
                Station {
                    id: 0,
                    position: Point::new(0.0, 0.0),
                    bandwidth_hz: 10.0,
                    static_power_w: 100.0,
                },
                Station {
                    id: 1,
                    position: Point::new(1.0, 0.0),
                    bandwidth_hz: 10.0,
                    static_power_w: 400.0,
                },
            ],
            Point::new(10.0, 10.0),
        )
        .unwrap();
        let b = BinaryAssignment::new(vec![0, 1], &inst.link, &inst.capacities()).unwrap();
        assert_eq!(energy_of(&b, &hetero).total_power_w, 500.0);

        let none = BinaryAssignment::new(vec![], &LinkMatrix::from_spectral_efficiency(Matrix::zeros(2, 0), vec![]).unwrap(), &[1.0, 1.0]).unwrap();
        assert_eq!(energy_of(&none, &hetero).total_power_w, 0.0);
    }

    #[test]
    fn twenty_three_stations_at_400_w() {
        let m = 23;
        let se = Matrix::filled(m, m, 1.0);
        let link = LinkMatrix::from_spectral_efficiency(se, vec![1.0; m]).unwrap();
        let b = BinaryAssignment::new((0..m).collect(), &link, &vec![1.0; m]).unwrap();
        let topo = crate::scenario::generate_hex_grid(1, m, 500.0, 1.0, 400.0).unwrap();
        assert_eq!(energy_of(&b, &topo).total_power_w, 9200.0);
    }
}
