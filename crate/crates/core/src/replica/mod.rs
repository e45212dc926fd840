//! Fixed points of the large-system equations, their free energy, and the
//! rates and error probabilities derived from them.

mod hysteresis;
mod metrics;
mod solver;
mod state;
mod system;

pub use hysteresis::{hysteresis_sweep, Direction, SweepPoint};
pub use metrics::{
    ber, ber_from_eta, ber_with, jdd, jdd_hn, jdd_hs, jdd_rate, sd_loss, sd_loss_of, sd_rate,
    sd_rate_of, stable_branch, JddReport,
};
pub use solver::{
    fixed_point_residual, free_energy, free_energy_at, solve, solve_branches, sweep_once,
    DEDUP_TOL, LIMIT_TOL, MF_SIGMA2, ZF_SIGMA2,
};
pub use state::{BranchLabel, Init, ReplicaState, SolutionBranch, SolverOptions, HOT_START};

#[cfg(test)]
mod tests;
