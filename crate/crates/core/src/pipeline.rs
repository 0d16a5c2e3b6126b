use crate::error::Result;
use crate::instance::Instance;
use crate::mm::{self, MmConfig, RelaxedAssignment, SolveTrace, Termination};
use crate::rounding::{energy_of, round_assignment, BinaryAssignment, EnergyReport};

/// Output of the full reconfiguration: MM iterations, rounding, and the
/// resulting set of stations left on.
#[derive(Clone, Debug)]
pub struct Reconfiguration {
    pub relaxed: RelaxedAssignment,
    pub trace: SolveTrace,
    pub assignment: BinaryAssignment,
    pub energy: EnergyReport,
}

/// Runs MM from the nearest-station start, rounds the final iterate, and
/// switches off every station left without users. A snapshot without users
/// switches everything off.
pub fn reconfigure(inst: &Instance, cfg: &MmConfig) -> Result<Reconfiguration> {
    let (relaxed, trace) = if inst.num_users() == 0 {
        cfg.validate()?;
        let m = inst.num_stations();
        let f = mm::objective(&[], cfg.epsilon, m, 0);
        let trace = SolveTrace {
            objective_per_iter: vec![f],
            active_count_per_iter: vec![0],
            w_per_iter: None,
            iterations_used: 0,
            termination: Termination::Tolerance,
        };
        (RelaxedAssignment::new(m, 0, Vec::new())?, trace)
    } else {
        mm::run_instance(inst, cfg)?
    };
    let assignment = round_assignment(&relaxed, &inst.link, &inst.topology, &inst.users)?;
    let energy = energy_of(&assignment, &inst.topology);
    Ok(Reconfiguration {
        relaxed,
        trace,
        assignment,
        energy,
    })
}
