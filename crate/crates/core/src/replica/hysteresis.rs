use serde::{Deserialize, Serialize};

use super::solver::{solve, solve_branches};
use super::state::{Init, SolutionBranch, SolverOptions};
use crate::error::Result;
use crate::model::{Constellation, DetectorSpec, NetworkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

/// One grid point of a continuation sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    /// Branch reached by warm-starting from the neighbouring point.
    pub tracked: Result<SolutionBranch>,
    /// Branch of least free energy at this point.
    pub stable: Result<SolutionBranch>,
}

/// Follows a branch along `grid` by warm-starting each point from the
/// previous one. An up-sweep starts cold and a down-sweep starts hot.
/// Points are returned in grid order whichever way the sweep runs; a failed
/// point is recorded and the sweep continues from the last good state.
pub fn hysteresis_sweep(
    grid: &[NetworkConfig],
    detector: &DetectorSpec,
    prior: &Constellation,
    direction: Direction,
    opts: &SolverOptions,
) -> Vec<SweepPoint> {
    let order: Vec<usize> = match direction {
        Direction::Up => (0..grid.len()).collect(),
        Direction::Down => (0..grid.len()).rev().collect(),
    };
    let mut init = match direction {
        Direction::Up => Init::Cold,
        Direction::Down => Init::Hot,
    };
    let mut out: Vec<Option<SweepPoint>> = vec![None; grid.len()];
    for i in order {
        let cfg = &grid[i];
        let tracked = solve(cfg, detector, prior, &opts.with_init(init.clone()));
        if let Ok(b) = &tracked {
            init = Init::Warm(b.state.clone());
        }
        let stable =
            solve_branches(cfg, detector, prior, opts).map(|(mut bs, k)| bs.swap_remove(k));
        out[i] = Some(SweepPoint { tracked, stable });
    }
    out.into_iter().flatten().collect()
}
