use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::channel::{complex_normal_vec, ChannelRealization};
use super::detect::{Prepared, Table};
use rayon::prelude::*;

use super::{pairwise_sum, run_trials, trial_rng, McEstimate};
use crate::error::{Error, Result};
use crate::model::{Constellation, DetectorSpec, DiscretePrior, NetworkConfig, Shape};
use crate::replica::{stable_branch, SolverOptions};
use crate::scalar::{q_function, scalar_moments, ScalarMoments, ScalarParams};

type CVec = DVector<Complex64>;

/// Sizes of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McOptions {
    /// Channel realizations.
    pub trials: usize,
    /// Input vectors (or noise draws) per realization.
    pub per_trial: usize,
    pub seed: u64,
}

impl McOptions {
    pub fn new(trials: usize, per_trial: usize, seed: u64) -> Self {
        Self {
            trials,
            per_trial,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.per_trial == 0 {
            return Err(Error::invalid("trial counts must be positive"));
        }
        Ok(())
    }
}

/// Input vectors per realization used by [`mc_ber`].
pub const BER_VECTORS: usize = 16;

/// `(1/M_0) ln det(I + C C^H)` in nats.
pub fn mi_gaussian(real: &ChannelRealization) -> f64 {
    let c = &real.c;
    let m0 = c.ncols();
    let gram = DMatrix::identity(m0, m0) + c.adjoint() * c;
    let chol = gram.cholesky().expect("I + C^H C is positive definite");
    let logdet: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.re.ln()).sum();
    logdet / m0 as f64
}

struct Sampler {
    points: Vec<Complex64>,
    index: Option<WeightedIndex<f64>>,
}

impl Sampler {
    fn new(prior: &Constellation) -> Result<Self> {
        match prior {
            Constellation::Gaussian => Ok(Self {
                points: vec![],
                index: None,
            }),
            Constellation::Discrete(d) => Ok(Self {
                points: d.points().to_vec(),
                index: Some(
                    WeightedIndex::new(d.probs())
                        .map_err(|e| Error::invalid(format!("prior weights: {e}")))?,
                ),
            }),
        }
    }

    fn draw(&self, rng: &mut impl Rng, n: usize) -> CVec {
        match &self.index {
            None => complex_normal_vec(rng, n),
            Some(ix) => CVec::from_fn(n, |_, _| self.points[ix.sample(rng)]),
        }
    }
}

/// Per-realization estimate of `(1/M_0) I(x; y | C)` for a discrete input,
/// averaging the output log-density over `noise_draws` samples.
pub fn mi_discrete(
    real: &ChannelRealization,
    prior: &DiscretePrior,
    noise_draws: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if noise_draws == 0 {
        return Err(Error::invalid("noise_draws must be positive"));
    }
    let table = Table::new(prior, &real.c)?;
    let sampler = Sampler::new(&Constellation::Discrete(prior.clone()))?;
    let mk = real.outputs();
    let mut acc = Vec::with_capacity(noise_draws);
    let mut cv = Vec::with_capacity(noise_draws);
    for _ in 0..noise_draws {
        let x = sampler.draw(rng, real.inputs());
        let w = complex_normal_vec(rng, mk);
        let y = &real.c * x + &w;
        let logw = table.log_weights(&y, 1.0);
        let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + logw.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
        // ln p(y | x) - ln p(y); the pi factors cancel. |w|^2 has known mean
        // M_K and serves as a control variate.
        acc.push(-w.norm_squared() - lse);
        cv.push(w.norm_squared() - mk as f64);
    }
    let n = noise_draws as f64;
    let ma = pairwise_sum(&acc) / n;
    let mc = pairwise_sum(&cv) / n;
    let cov: f64 = acc.iter().zip(&cv).map(|(a, c)| (a - ma) * (c - mc)).sum();
    let var: f64 = cv.iter().map(|c| (c - mc).powi(2)).sum();
    let b = if var > 0.0 { cov / var } else { 0.0 };
    Ok((ma - b * mc) / real.inputs() as f64)
}

/// Ergodic Gaussian-input rate over independent realizations.
pub fn mc_mi_gaussian(cfg: &NetworkConfig, trials: usize, seed: u64) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let v = run_trials(trials, seed, |rng| {
        mi_gaussian(&ChannelRealization::sample(cfg, rng))
    });
    Ok(McEstimate::from_samples(&v, seed))
}

/// Ergodic discrete-input rate; `opts.per_trial` noise draws per realization.
pub fn mc_mi_discrete(
    cfg: &NetworkConfig,
    prior: &Constellation,
    opts: &McOptions,
) -> Result<McEstimate> {
    opts.validate()?;
    let d = prior.as_discrete().ok_or_else(|| {
        Error::UnsupportedPrior("discrete-input MI needs a discrete prior".into())
    })?;
    super::detect::Enumeration::new(d, cfg.antennas()[0])?;
    let v: Result<Vec<f64>> = run_trials(opts.trials, opts.seed, |rng| {
        let real = ChannelRealization::sample(cfg, rng);
        mi_discrete(&real, d, opts.per_trial, rng)
    })
    .into_iter()
    .collect();
    Ok(McEstimate::from_samples(&v?, opts.seed))
}

/// [`mc_mi_discrete`] with the Gaussian-input rate of the same realization as
/// a control variate. Its mean is taken from `gaussian_trials` extra
/// realizations, which are cheap next to the enumeration.
pub fn mc_mi_discrete_controlled(
    cfg: &NetworkConfig,
    prior: &Constellation,
    opts: &McOptions,
    gaussian_trials: usize,
) -> Result<McEstimate> {
    opts.validate()?;
    if gaussian_trials < 2 || opts.trials < 3 {
        return Err(Error::invalid(
            "control variate needs at least 3 trials and 2 reference trials",
        ));
    }
    let d = prior.as_discrete().ok_or_else(|| {
        Error::UnsupportedPrior("discrete-input MI needs a discrete prior".into())
    })?;
    super::detect::Enumeration::new(d, cfg.antennas()[0])?;
    let pairs: Result<Vec<(f64, f64)>> = run_trials(opts.trials, opts.seed, |rng| {
        let real = ChannelRealization::sample(cfg, rng);
        Ok((
            mi_discrete(&real, d, opts.per_trial, rng)?,
            mi_gaussian(&real),
        ))
    })
    .into_iter()
    .collect();
    let (x, g): (Vec<f64>, Vec<f64>) = pairs?.into_iter().unzip();
    // reference realizations use the streams after the paired ones
    let reference: Vec<f64> = (opts.trials..opts.trials + gaussian_trials)
        .into_par_iter()
        .map(|i| {
            mi_gaussian(&ChannelRealization::sample(
                cfg,
                &mut trial_rng(opts.seed, i),
            ))
        })
        .collect();
    let n = x.len() as f64;
    let (mx, mg) = (pairwise_sum(&x) / n, pairwise_sum(&g) / n);
    let cov: Vec<f64> = x.iter().zip(&g).map(|(a, b)| (a - mx) * (b - mg)).collect();
    let sq: Vec<f64> = g.iter().map(|b| (b - mg).powi(2)).collect();
    let var_g = pairwise_sum(&sq);
    let b = if var_g > 0.0 {
        pairwise_sum(&cov) / var_g
    } else {
        0.0
    };
    let adjusted: Vec<f64> = x.iter().zip(&g).map(|(a, c)| a - b * (c - mg)).collect();
    let mut est = McEstimate::from_samples(&adjusted, opts.seed);
    let r = McEstimate::from_samples(&reference, opts.seed);
    est.mean -= b * (mg - r.mean);
    est.std_error = (est.std_error.powi(2) + (b * r.std_error).powi(2)).sqrt();
    Ok(est)
}

fn gray_bit_errors(sent: Complex64, got: Complex64) -> usize {
    usize::from((sent.re > 0.0) != (got.re > 0.0)) + usize::from((sent.im > 0.0) != (got.im > 0.0))
}

/// Bit error rate of a detector on QPSK with Gray mapping, using
/// [`BER_VECTORS`] input vectors per realization.
pub fn mc_ber(
    cfg: &NetworkConfig,
    detector: &DetectorSpec,
    constellation: &Constellation,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    mc_ber_with(
        cfg,
        detector,
        constellation,
        &McOptions::new(trials, BER_VECTORS, seed),
    )
}

/// [`mc_ber`] with explicit sizes. The standard error treats each
/// realization as one sample, which accounts for the correlation of errors
/// within a realization.
pub fn mc_ber_with(
    cfg: &NetworkConfig,
    detector: &DetectorSpec,
    constellation: &Constellation,
    opts: &McOptions,
) -> Result<McEstimate> {
    opts.validate()?;
    let d = match constellation.as_discrete() {
        Some(d) if d.shape() == Shape::Psk(4) => d,
        _ => {
            return Err(Error::UnsupportedPrior(format!(
                "bit error simulation needs QPSK, got {constellation}"
            )))
        }
    };
    detector.validate(constellation)?;
    let sampler = Sampler::new(constellation)?;
    let m0 = cfg.antennas()[0];
    let v: Result<Vec<f64>> = run_trials(opts.trials, opts.seed, |rng| {
        let real = ChannelRealization::sample(cfg, rng);
        let det = Prepared::new(&real, detector)?;
        let mut errors = 0;
        for _ in 0..opts.per_trial {
            let x = sampler.draw(rng, m0);
            let y = &real.c * &x + complex_normal_vec(rng, real.outputs());
            let xh = det.decide(&real, &y, d);
            errors += x
                .iter()
                .zip(xh.iter())
                .map(|(a, b)| gray_bit_errors(*a, *b))
                .sum::<usize>();
        }
        Ok(errors as f64 / (2 * m0 * opts.per_trial) as f64)
    })
    .into_iter()
    .collect();
    Ok(McEstimate::from_samples(&v?, opts.seed))
}

/// `tr(C C^H) / M_0` averaged over realizations.
pub fn mc_trace(cfg: &NetworkConfig, realizations: usize, seed: u64) -> Result<McEstimate> {
    if realizations == 0 {
        return Err(Error::invalid("realizations must be positive"));
    }
    let v = run_trials(realizations, seed, |rng| {
        let real = ChannelRealization::sample(cfg, rng);
        real.c.norm_squared() / real.inputs() as f64
    });
    Ok(McEstimate::from_samples(&v, seed))
}

/// Interference-free bound `Q(sqrt(E tr(C C^H) / M_0))` on the QPSK bit
/// error rate of any detector.
pub fn mc_lower_bound(cfg: &NetworkConfig, realizations: usize, seed: u64) -> Result<f64> {
    Ok(q_function(
        mc_trace(cfg, realizations, seed)?.mean.max(0.0).sqrt(),
    ))
}

/// Empirical joint moments of `(x, <x'>)` next to the decoupled scalar
/// channel prediction.
#[derive(Debug, Clone)]
pub struct DecouplingReport {
    /// `Re E{x <x'>^*}`.
    pub cross: McEstimate,
    /// `E|<x'>|^2`.
    pub energy: McEstimate,
    /// `E|x - <x'>|^2`.
    pub mse: McEstimate,
    pub predicted: ScalarMoments,
    pub eta1: f64,
    pub xi1: f64,
}

/// Runs the vector posterior-mean estimator of `detector` and pools the
/// per-stream moments over streams and realizations.
pub fn mc_decoupling(
    cfg: &NetworkConfig,
    detector: &DetectorSpec,
    prior: &Constellation,
    opts: &McOptions,
) -> Result<DecouplingReport> {
    opts.validate()?;
    detector.validate(prior)?;
    let branch = stable_branch(cfg, detector, prior, &SolverOptions::default())?;
    let (eta1, xi1) = (branch.state.eta[0], branch.state.xi[0]);
    let predicted = scalar_moments(
        &ScalarParams::new(cfg.gain(), eta1, xi1)?,
        prior,
        &detector.postulated_prior,
    )?;

    let sampler = Sampler::new(prior)?;
    let m0 = cfg.antennas()[0];
    let rows: Result<Vec<[f64; 3]>> = run_trials(opts.trials, opts.seed, |rng| {
        let real = ChannelRealization::sample(cfg, rng);
        let est = Prepared::new(&real, detector)?;
        let mut acc = [0.0; 3];
        for _ in 0..opts.per_trial {
            let x = sampler.draw(rng, m0);
            let y = &real.c * &x + complex_normal_vec(rng, real.outputs());
            let m = est.mean(&y);
            for (a, b) in x.iter().zip(m.iter()) {
                acc[0] += (a * b.conj()).re;
                acc[1] += b.norm_sqr();
                acc[2] += (a - b).norm_sqr();
            }
        }
        let n = (m0 * opts.per_trial) as f64;
        Ok(acc.map(|v| v / n))
    })
    .into_iter()
    .collect();
    let rows = rows?;
    let column = |j: usize| {
        let v: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        McEstimate::from_samples(&v, opts.seed)
    };
    Ok(DecouplingReport {
        cross: column(0),
        energy: column(1),
        mse: column(2),
        predicted,
        eta1,
        xi1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{sample_realization, trial_rng};
    use crate::model::*;
    use approx::assert_relative_eq;

    fn cfg(m: &[usize], snr: &[f64]) -> NetworkConfig {
        build_network(snr.len(), m, snr, BetaMode::Auto, ChannelNorm::default()).unwrap()
    }

    fn injected(c: DMatrix<Complex64>) -> ChannelRealization {
        ChannelRealization::from_hops(vec![c]).unwrap()
    }

    #[test]
    fn gaussian_mi_examples() {
        let i = injected(DMatrix::identity(3, 3));
        assert_relative_eq!(mi_gaussian(&i), 2f64.ln(), epsilon = 1e-14);
        assert_eq!(mi_gaussian(&injected(DMatrix::zeros(3, 3))), 0.0);
    }

    #[test]
    fn gaussian_mi_is_unitarily_invariant() {
        let r = sample_realization(&cfg(&[3, 4], &[5.0]), 2);
        let mut rng = trial_rng(3, 0);
        let a = DMatrix::from_fn(4, 4, |_, _| {
            super::super::channel::complex_normal(&mut rng, 1.0)
        });
        let u = a.qr().q();
        let rotated = injected(&u * &r.c);
        assert_relative_eq!(mi_gaussian(&r), mi_gaussian(&rotated), epsilon = 1e-12);
    }

    #[test]
    fn discrete_mi_limits() {
        let q = Constellation::qpsk();
        let d = q.as_discrete().unwrap();
        let mut rng = trial_rng(4, 0);
        let zero = injected(DMatrix::zeros(2, 2));
        assert!(mi_discrete(&zero, d, 50, &mut rng).unwrap().abs() < 1e-12);
        let r = sample_realization(&cfg(&[2, 2], &[1.0]), 5);
        let loud = injected(&r.c * Complex64::from(1e3));
        assert_relative_eq!(
            mi_discrete(&loud, d, 50, &mut rng).unwrap(),
            4f64.ln(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn discrete_mi_below_gaussian_and_entropy() {
        let q = Constellation::qpsk();
        let d = q.as_discrete().unwrap();
        let mut rng = trial_rng(6, 0);
        for seed in 0..4 {
            let r = sample_realization(&cfg(&[3, 3, 3], &[3.0, 10.0]), seed);
            let v = mi_discrete(&r, d, 4000, &mut rng).unwrap();
            assert!(v <= mi_gaussian(&r) + 0.02 && v <= 4f64.ln() + 0.02, "{v}");
        }
    }

    #[test]
    fn estimates_are_deterministic_and_shrink() {
        let c = cfg(&[4, 4, 4], &[3.0, 10.0]);
        let a = mc_mi_gaussian(&c, 400, 7).unwrap();
        assert_eq!(a, mc_mi_gaussian(&c, 400, 7).unwrap());
        let b = mc_mi_gaussian(&c, 1600, 7).unwrap();
        let ratio = a.std_error / b.std_error;
        assert!((1.6..2.4).contains(&ratio), "{ratio}");
    }

    #[test]
    fn ber_at_vanishing_snr_is_half() {
        let q = Constellation::qpsk();
        let c = cfg(&[4, 4], &[1e-8]);
        let e = mc_ber(&c, &DetectorSpec::lmmse(), &q, 400, 1).unwrap();
        assert!(e.z_score(0.5) < 3.0, "{e:?}");
        assert!(mc_ber(&c, &DetectorSpec::lmmse(), &Constellation::bpsk(), 4, 1).is_err());
    }

    #[test]
    fn single_hop_trace_identity() {
        let c = cfg(&[6, 6], &[2.5]);
        let t = mc_trace(&c, 2000, 3).unwrap();
        assert!(t.z_score(2.5) < 3.0, "{t:?}");
        let lb = mc_lower_bound(&c, 2000, 3).unwrap();
        assert_relative_eq!(lb, q_function(t.mean.sqrt()));
    }

    #[test]
    fn detector_bounds() {
        let q = Constellation::qpsk();
        let c = cfg(&[4, 5, 6], &[4.0, 20.0]);
        let o = McOptions::new(300, 8, 11);
        let map = mc_ber_with(&c, &DetectorSpec::map(&q), &q, &o).unwrap();
        let lin = mc_ber_with(&c, &DetectorSpec::lmmse(), &q, &o).unwrap();
        let lb = mc_lower_bound(&c, 2000, 12).unwrap();
        assert!(map.mean <= lin.mean);
        assert!(lb <= map.mean + 3.0 * map.std_error);
    }

    #[test]
    fn decoupling_trivial_and_noiseless() {
        let q = Constellation::qpsk();
        let c = cfg(&[4, 8], &[1e6]);
        let r = mc_decoupling(&c, &DetectorSpec::zf(), &q, &McOptions::new(50, 4, 1)).unwrap();
        assert!((r.cross.mean - 1.0).abs() < 1e-2);
        let mf = DetectorSpec::custom(
            Constellation::gaussian(),
            crate::model::NoiseLevel::Finite(1e12),
        );
        let r = mc_decoupling(&cfg(&[4, 4], &[1.0]), &mf, &q, &McOptions::new(20, 4, 1)).unwrap();
        assert!(r.energy.mean < 1e-20);
        assert_relative_eq!(r.mse.mean, 1.0, epsilon = 1e-10);
    }
}
