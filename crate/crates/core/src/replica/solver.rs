use super::state::{BranchLabel, Init, ReplicaState, SolutionBranch, SolverOptions};
use super::system::{Mode, System};
use crate::error::{Error, Result};
use crate::model::{Constellation, DetectorSpec, NetworkConfig, NoiseLevel};

/// Starting postulated noise variance of the matched-filter limit.
pub const MF_SIGMA2: f64 = 1e8;
/// Starting postulated noise variance of the zero-forcing limit.
pub const ZF_SIGMA2: f64 = 1e-8;
/// Relative change of `(eta, eps)` below which a limit is considered reached.
pub const LIMIT_TOL: f64 = 1e-8;
const LIMIT_STEPS: usize = 60;

/// Two converged states closer than this are the same branch.
pub const DEDUP_TOL: f64 = 1e-8;

fn mode_for(detector: &DetectorSpec, prior: &Constellation) -> Mode {
    if detector.is_matched(prior) {
        Mode::Matched
    } else {
        Mode::Full
    }
}

fn system<'a>(
    cfg: &'a NetworkConfig,
    detector: &'a DetectorSpec,
    prior: &'a Constellation,
    sigma2: f64,
) -> System<'a> {
    System {
        cfg,
        p: prior,
        q: &detector.postulated_prior,
        sigma2,
        mode: mode_for(detector, prior),
    }
}

fn finite_sigma2(detector: &DetectorSpec) -> Option<f64> {
    match detector.sigma2 {
        NoiseLevel::Finite(s) => Some(s),
        _ => None,
    }
}

/// One damped update of the fixed-point system at a finite postulated noise
/// level.
pub fn sweep_once(
    state: &ReplicaState,
    cfg: &NetworkConfig,
    detector: &DetectorSpec,
    prior: &Constellation,
    damping: f64,
) -> Result<ReplicaState> {
    detector.validate(prior)?;
    state.check_hops(cfg.hops())?;
    let sigma2 = finite_sigma2(detector).ok_or_else(|| {
        Error::InvalidDetector("sweep_once needs a finite postulated noise level".into())
    })?;
    let sys = system(cfg, detector, prior, sigma2);
    Ok(state.blend(&sys.update(state, false)?, damping))
}

/// Largest relative violation of the fixed-point equations at `state`, with
/// every right-hand side evaluated at `state`.
pub fn fixed_point_residual(
    state: &ReplicaState,
    cfg: &NetworkConfig,
    detector: &DetectorSpec,
    prior: &Constellation,
    sigma2: f64,
) -> Result<f64> {
    state.check_hops(cfg.hops())?;
    let sys = System {
        mode: Mode::Full,
        ..system(cfg, detector, prior, sigma2)
    };
    Ok(sys.update(state, true)?.distance(state))
}

/// Damped iteration to a fixed point. The returned branch may be
/// unconverged; callers decide what to do with it.
pub(crate) fn iterate(sys: &System, opts: &SolverOptions) -> Result<SolutionBranch> {
    opts.validate()?;
    let mut x = sys.initial_state(&opts.init);
    x.check_hops(sys.cfg.hops())?;
    let mut best = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let t = sys.update(&x, false)?;
        if !t.is_valid() {
            return Err(Error::NonConvergence {
                iterations,
                residual: best,
            });
        }
        let change = t.distance(&x);
        best = best.min(change);
        x = x.blend(&t, opts.damping);
        if change <= opts.tol {
            residual = sys.update(&x, true)?.distance(&x);
            if residual <= opts.tol {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        residual = sys.update(&x, true)?.distance(&x);
    }
    let free_energy = match sys.mode {
        Mode::Pinned => f64::NAN,
        _ => sys.free_energy(&x).unwrap_or(f64::NAN),
    };
    Ok(SolutionBranch {
        state: x,
        free_energy,
        residual,
        iterations,
        converged,
        label: BranchLabel::from(&opts.init),
        sigma2: sys.sigma2,
    })
}

fn require_converged(branch: SolutionBranch) -> Result<SolutionBranch> {
    if branch.converged {
        Ok(branch)
    } else {
        Err(Error::NonConvergence {
            iterations: branch.iterations,
            residual: branch.residual,
        })
    }
}

/// Solves the fixed-point system from `opts.init`. Symbolic noise limits
/// are approached by scaling the postulated noise variance until `eta` and
/// `eps` settle.
pub fn solve(
    cfg: &NetworkConfig,
    detector: &DetectorSpec,
    prior: &Constellation,
    opts: &SolverOptions,
) -> Result<SolutionBranch> {
    detector.validate(prior)?;
    match detector.sigma2 {
        NoiseLevel::Finite(s) => {
            require_converged(iterate(&system(cfg, detector, prior, s), opts)?)
        }
        NoiseLevel::InfinityLimit => solve_limit(cfg, detector, prior, opts, MF_SIGMA2, 2.0),
        NoiseLevel::ZeroLimit => solve_limit(cfg, detector, prior, opts, ZF_SIGMA2, 0.5),
    }
}

fn solve_limit(
    cfg: &NetworkConfig,
    detector: &DetectorSpec,
    prior: &Constellation,
    opts: &SolverOptions,
    start: f64,
    factor: f64,
) -> Result<SolutionBranch> {
    let zf = detector.sigma2 == NoiseLevel::ZeroLimit;
    let degenerate = |why: String| -> Error {
        if zf {
            Error::ZeroForcingDegenerate(why)
        } else {
            Error::NonConvergence {
                iterations: 0,
                residual: f64::INFINITY,
            }
        }
    };
    let run = |sigma2: f64, init: Init| -> Result<SolutionBranch> {
        let sys = system(cfg, detector, prior, sigma2);
        match iterate(&sys, &opts.with_init(init)) {
            Ok(b) if b.converged && b.state.eta[0] > 0.0 => Ok(b),
            Ok(b) => Err(degenerate(format!(
                "no finite fixed point at sigma^2 = {sigma2:e} (residual {:.3e}, eta_1 = {:e})",
                b.residual, b.state.eta[0]
            ))),
            Err(e) if zf => Err(degenerate(format!(
                "fixed point broke down at sigma^2 = {sigma2:e}: {e}"
            ))),
            Err(e) => Err(e),
        }
    };
    let mut sigma2 = start;
    let mut prev = run(sigma2, opts.init.clone())?;
    for _ in 0..LIMIT_STEPS {
        sigma2 *= factor;
        let next = run(sigma2, Init::Warm(prev.state.clone()))?;
        let change = prev
            .state
            .eta
            .iter()
            .chain(&prev.state.eps)
            .zip(next.state.eta.iter().chain(&next.state.eps))
            .map(|(a, b)| (a - b).abs() / b.abs().max(1e-300))
            .fold(0.0, f64::max);
        if change < LIMIT_TOL {
            return Ok(SolutionBranch {
                label: BranchLabel::from(&opts.init),
                ..next
            });
        }
        prev = next;
    }
    Err(degenerate(format!(
        "eta and eps did not settle as sigma^2 -> {}",
        if zf { "0" } else { "infinity" }
    )))
}

/// All distinct branches reached from the cold and hot starts, the starting
/// point in `opts.init` and optional dense starts, with the index of the
/// converged branch of least free energy.
pub fn solve_branches(
    cfg: &NetworkConfig,
    detector: &DetectorSpec,
    prior: &Constellation,
    opts: &SolverOptions,
) -> Result<(Vec<SolutionBranch>, usize)> {
    detector.validate(prior)?;
    let mut inits = vec![Init::Cold, Init::Hot];
    if !matches!(opts.init, Init::Cold | Init::Hot) {
        inits.push(opts.init.clone());
    }
    if opts.dense_starts > 0 {
        let g = cfg.gain();
        let lo = (1e-6f64).min(g);
        let n = opts.dense_starts;
        for i in 0..n {
            let t = if n == 1 {
                0.5
            } else {
                i as f64 / (n - 1) as f64
            };
            inits.push(Init::Start(lo * (g / lo).powf(t)));
        }
    }

    let mut branches: Vec<SolutionBranch> = Vec::new();
    let mut best_residual = f64::INFINITY;
    for init in inits {
        let attempt = match finite_sigma2(detector) {
            Some(s) => iterate(&system(cfg, detector, prior, s), &opts.with_init(init)),
            None => solve(cfg, detector, prior, &opts.with_init(init)),
        };
        let branch = match attempt {
            Ok(b) => b,
            Err(Error::NonConvergence { residual, .. }) => {
                best_residual = best_residual.min(residual);
                continue;
            }
            Err(e) => return Err(e),
        };
        best_residual = best_residual.min(branch.residual);
        if !branches.iter().any(|b| {
            b.converged == branch.converged && b.state.distance(&branch.state) <= DEDUP_TOL
        }) {
            branches.push(branch);
        }
    }
    let stable = branches
        .iter()
        .enumerate()
        .filter(|(_, b)| b.converged && b.free_energy.is_finite())
        .min_by(|a, b| a.1.free_energy.total_cmp(&b.1.free_energy))
        .map(|(i, _)| i)
        .ok_or(Error::NoConvergedBranch { best_residual })?;
    Ok((branches, stable))
}

/// Free energy of a solved branch.
pub fn free_energy(
    branch: &SolutionBranch,
    cfg: &NetworkConfig,
    detector: &DetectorSpec,
    prior: &Constellation,
) -> Result<f64> {
    free_energy_at(&branch.state, cfg, detector, prior, branch.sigma2)
}

/// Free energy at an arbitrary positive state and postulated noise level.
pub fn free_energy_at(
    state: &ReplicaState,
    cfg: &NetworkConfig,
    detector: &DetectorSpec,
    prior: &Constellation,
    sigma2: f64,
) -> Result<f64> {
    state.check_hops(cfg.hops())?;
    let k = cfg.hops();
    if state.xi[0] <= 0.0 || (0..k).any(|i| state.eta[i] <= 0.0) {
        return Err(Error::SingularInput(
            "free energy needs xi_1 > 0 and eta_k > 0".into(),
        ));
    }
    system(cfg, detector, prior, sigma2).free_energy(state)
}
