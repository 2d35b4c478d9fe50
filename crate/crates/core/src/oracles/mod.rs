//! Ground truth that does not go through any contour integral.

mod master;
mod mc;
mod skellam;

pub use master::{light_cone_margin, light_cone_window, master_equation, MasterSolution, BOUNDARY_LIMIT, MAX_PARTICLES, MAX_STATES};
pub use mc::{mc_current_tail, mc_margin, mc_simulate, mc_simulate_many, EmpiricalCdf, SimConfig, MAX_FLAGGED_FRACTION};
pub use skellam::skellam_single;
