use super::solver::{iterate, solve_branches};
use super::state::{Init, ReplicaState, SolutionBranch, SolverOptions};
use super::system::{Mode, System};
use crate::error::{Error, Result};
use crate::model::{Constellation, DetectorSpec, NetworkConfig, Shape};
use crate::scalar::{q_function, scalar_mi, sd_rate_scalar};

/// Entropies and rate of joint detection and decoding, in nats per source
/// antenna.
#[derive(Debug, Clone)]
pub struct JddReport {
    pub hs: f64,
    pub hn: f64,
    /// `hs - hn`, without any TDMA factor.
    pub rate: f64,
    pub branches: Vec<SolutionBranch>,
    pub stable: usize,
    /// Solution of the system with the first-hop parameters pinned to zero.
    pub noise_state: ReplicaState,
}

impl JddReport {
    pub fn stable_branch(&self) -> &SolutionBranch {
        &self.branches[self.stable]
    }
}

fn tdma_factor(cfg: &NetworkConfig, tdma: bool) -> f64 {
    if tdma {
        1.0 / cfg.hops() as f64
    } else {
        1.0
    }
}

fn matched_system<'a>(cfg: &'a NetworkConfig, prior: &'a Constellation, mode: Mode) -> System<'a> {
    System {
        cfg,
        p: prior,
        q: prior,
        sigma2: 1.0,
        mode,
    }
}

fn noise_state(
    cfg: &NetworkConfig,
    prior: &Constellation,
    opts: &SolverOptions,
) -> Result<ReplicaState> {
    let sys = matched_system(cfg, prior, Mode::Pinned);
    let mut best: Option<(f64, ReplicaState)> = None;
    let mut best_residual = f64::INFINITY;
    for init in [Init::Cold, Init::Hot] {
        let b = iterate(&sys, &opts.with_init(init))?;
        best_residual = best_residual.min(b.residual);
        if !b.converged {
            continue;
        }
        let h = sys.entropy(&b.state, 0.0);
        if best.as_ref().is_none_or(|(hb, _)| h < *hb) {
            best = Some((h, b.state));
        }
    }
    best.map(|(_, s)| s)
        .ok_or(Error::NoConvergedBranch { best_residual })
}

/// Joint-decoding entropies from the matched system. Among several
/// branches the one of least free energy is used.
pub fn jdd(cfg: &NetworkConfig, prior: &Constellation, opts: &SolverOptions) -> Result<JddReport> {
    let det = DetectorSpec::jdd(prior);
    let (branches, stable) = solve_branches(cfg, &det, prior, opts)?;
    let s = &branches[stable].state;
    let sys = matched_system(cfg, prior, Mode::Matched);
    let hs = sys.entropy(s, scalar_mi(cfg.gain(), s.eta[0], prior)?);
    let ns = noise_state(cfg, prior, opts)?;
    let hn = matched_system(cfg, prior, Mode::Pinned).entropy(&ns, 0.0);
    Ok(JddReport {
        hs,
        hn,
        rate: hs - hn,
        branches,
        stable,
        noise_state: ns,
    })
}

pub fn jdd_hs(cfg: &NetworkConfig, prior: &Constellation) -> Result<f64> {
    Ok(jdd(cfg, prior, &SolverOptions::default())?.hs)
}

pub fn jdd_hn(cfg: &NetworkConfig, prior: &Constellation) -> Result<f64> {
    let ns = noise_state(cfg, prior, &SolverOptions::default())?;
    Ok(matched_system(cfg, prior, Mode::Pinned).entropy(&ns, 0.0))
}

/// Achievable rate with joint detection and decoding; `tdma` applies the
/// `1/K` factor of half-duplex relaying.
pub fn jdd_rate(cfg: &NetworkConfig, prior: &Constellation, tdma: bool) -> Result<f64> {
    Ok(jdd(cfg, prior, &SolverOptions::default())?.rate * tdma_factor(cfg, tdma))
}

/// Stable branch of a detector.
pub fn stable_branch(
    cfg: &NetworkConfig,
    detector: &DetectorSpec,
    prior: &Constellation,
    opts: &SolverOptions,
) -> Result<SolutionBranch> {
    let (mut branches, stable) = solve_branches(cfg, detector, prior, opts)?;
    Ok(branches.swap_remove(stable))
}

/// Rate of separate detection and decoding with the given detector.
pub fn sd_rate(
    cfg: &NetworkConfig,
    prior: &Constellation,
    detector: &DetectorSpec,
    tdma: bool,
) -> Result<f64> {
    let b = stable_branch(cfg, detector, prior, &SolverOptions::default())?;
    sd_rate_of(cfg, prior, &b, tdma)
}

/// Separate-decoding rate of an already solved branch.
pub fn sd_rate_of(
    cfg: &NetworkConfig,
    prior: &Constellation,
    branch: &SolutionBranch,
    tdma: bool,
) -> Result<f64> {
    Ok(sd_rate_scalar(cfg.gain(), branch.state.eta[0], prior)? * tdma_factor(cfg, tdma))
}

/// Information lost by separating detection from decoding under the
/// matched individually optimal detector, from the hop parameters of the
/// signal and noise systems.
pub fn sd_loss(cfg: &NetworkConfig, prior: &Constellation, tdma: bool) -> Result<f64> {
    let r = jdd(cfg, prior, &SolverOptions::default())?;
    Ok(sd_loss_of(cfg, &r.stable_branch().state, &r.noise_state) * tdma_factor(cfg, tdma))
}

/// The loss expression for a signal state `s` and noise state `n`.
pub fn sd_loss_of(cfg: &NetworkConfig, s: &ReplicaState, n: &ReplicaState) -> f64 {
    let k = cfg.hops();
    let a0 = |j: usize| cfg.ratio(0, j);
    let mut loss = a0(k) * ((1.0 + s.eps[k - 1]) / (1.0 + n.eps[k - 1])).ln();
    for j in 1..k {
        let a = cfg.hop_gain(j);
        let top = a * s.eta[j] * (s.eps[j - 1] + 1.0);
        let bot = a * n.eta[j] * (n.eps[j - 1] + 1.0);
        loss += a0(j) * (top.ln_1p() - bot.ln_1p());
    }
    for i in 0..k {
        loss -= a0(i) * (s.eta[i] * s.eps[i] - n.eta[i] * n.eps[i]);
    }
    loss
}

/// Symbol error probability per quadrature branch for QPSK.
pub fn ber_from_eta(gain: f64, eta1: f64) -> f64 {
    q_function((gain * eta1).sqrt())
}

/// Asymptotic BER of a detector on QPSK input, using the stable branch.
pub fn ber(cfg: &NetworkConfig, detector: &DetectorSpec) -> Result<f64> {
    ber_with(
        cfg,
        detector,
        &Constellation::qpsk(),
        &SolverOptions::default(),
    )
}

/// [`ber`] for any four-point PSK input and solver options.
pub fn ber_with(
    cfg: &NetworkConfig,
    detector: &DetectorSpec,
    prior: &Constellation,
    opts: &SolverOptions,
) -> Result<f64> {
    if prior.shape() != Some(Shape::Psk(4)) {
        return Err(Error::UnsupportedPrior(format!(
            "the BER prediction needs QPSK input, got {prior}"
        )));
    }
    let b = stable_branch(cfg, detector, prior, opts)?;
    Ok(ber_from_eta(cfg.gain(), b.state.eta[0]))
}
