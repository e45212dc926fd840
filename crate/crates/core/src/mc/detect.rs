use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::model::{Constellation, DetectorSpec, DiscretePrior, NoiseLevel};
use crate::replica::{MF_SIGMA2, ZF_SIGMA2};

type CMat = DMatrix<Complex64>;
type CVec = DVector<Complex64>;

/// Largest number of input vectors an exhaustive sum may visit.
pub const ENUMERATION_LIMIT: u128 = 1 << 20;

/// All `|X|^M` input vectors of a discrete prior.
#[derive(Debug, Clone)]
pub struct Enumeration {
    points: Vec<Complex64>,
    log_probs: Vec<f64>,
    len: usize,
    count: usize,
}

impl Enumeration {
    pub fn new(prior: &DiscretePrior, len: usize) -> Result<Self> {
        let n = prior.len() as u128;
        let terms = (0..len)
            .try_fold(1u128, |acc, _| acc.checked_mul(n))
            .unwrap_or(u128::MAX);
        if terms > ENUMERATION_LIMIT {
            return Err(Error::EnumerationLimit {
                terms,
                limit: ENUMERATION_LIMIT,
            });
        }
        Ok(Self {
            points: prior.points().to_vec(),
            log_probs: prior.probs().iter().map(|p| p.ln()).collect(),
            len,
            count: terms as usize,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Point indices of vector `idx`, least significant entry first.
    pub fn digits(&self, mut idx: usize, out: &mut [usize]) {
        let n = self.points.len();
        for d in out.iter_mut() {
            *d = idx % n;
            idx /= n;
        }
    }

    pub fn vector(&self, idx: usize) -> CVec {
        let mut d = vec![0; self.len];
        self.digits(idx, &mut d);
        CVec::from_iterator(self.len, d.iter().map(|&i| self.points[i]))
    }

    pub fn log_prior(&self, idx: usize) -> f64 {
        let mut d = vec![0; self.len];
        self.digits(idx, &mut d);
        d.iter().map(|&i| self.log_probs[i]).sum()
    }

    pub fn log_priors(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.log_prior(i)).collect()
    }

    /// `C x` for every vector.
    pub fn images(&self, c: &CMat) -> Vec<CVec> {
        (0..self.count).map(|i| c * self.vector(i)).collect()
    }
}

/// Input vectors with their images `C x` and log prior weights.
pub(crate) struct Table {
    pub e: Enumeration,
    pub images: Vec<CVec>,
    pub log_priors: Vec<f64>,
}

impl Table {
    pub fn new(prior: &DiscretePrior, c: &CMat) -> Result<Self> {
        let e = Enumeration::new(prior, c.ncols())?;
        Ok(Self {
            images: e.images(c),
            log_priors: e.log_priors(),
            e,
        })
    }

    /// Log-weights `ln q(x) - |y - C x|^2 / sigma2` of every input vector.
    pub fn log_weights(&self, y: &CVec, sigma2: f64) -> Vec<f64> {
        self.images
            .iter()
            .zip(&self.log_priors)
            .map(|(cx, lp)| lp - (y - cx).norm_squared() / sigma2)
            .collect()
    }
}

fn normalize(logw: &mut [f64]) {
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for w in logw.iter_mut() {
        *w = (*w - top).exp();
        total += *w;
    }
    for w in logw.iter_mut() {
        *w /= total;
    }
}

fn finite_noise(level: NoiseLevel) -> f64 {
    match level {
        NoiseLevel::Finite(s) => s,
        NoiseLevel::InfinityLimit => MF_SIGMA2,
        NoiseLevel::ZeroLimit => ZF_SIGMA2,
    }
}

/// The linear posterior-mean filter of a Gaussian postulated prior.
#[derive(Debug, Clone)]
pub struct LinearFilter {
    /// `(C^H C + sigma^2 I)^{-1} C^H`, or its limit.
    pub w: CMat,
}

impl LinearFilter {
    pub fn new(c: &CMat, level: NoiseLevel) -> Result<Self> {
        let gram = c.adjoint() * c;
        let m = gram.nrows();
        let w = match level {
            NoiseLevel::InfinityLimit => c.adjoint() / Complex64::from(MF_SIGMA2),
            NoiseLevel::ZeroLimit => {
                let eig = gram.clone().symmetric_eigen().eigenvalues;
                let (lo, hi) = (eig.min(), eig.max());
                if !(lo > 1e-12 * hi) {
                    return Err(Error::SingularMatrix(format!(
                        "C^H C is not invertible (eigenvalues {lo:e} .. {hi:e})"
                    )));
                }
                gram.cholesky()
                    .ok_or_else(|| Error::SingularMatrix("C^H C is not invertible".into()))?
                    .solve(&c.adjoint())
            }
            NoiseLevel::Finite(s) => (gram + CMat::identity(m, m) * Complex64::from(s))
                .cholesky()
                .ok_or_else(|| Error::SingularMatrix("regularized Gram matrix".into()))?
                .solve(&c.adjoint()),
        };
        Ok(Self { w })
    }

    pub fn apply(&self, y: &CVec) -> CVec {
        &self.w * y
    }
}

/// Precomputed state of a detector on one realization.
pub(crate) enum Prepared {
    Linear(LinearFilter),
    Exhaustive { table: Table, sigma2: f64 },
}

impl Prepared {
    pub fn new(real: &ChannelRealization, detector: &DetectorSpec) -> Result<Self> {
        match &detector.postulated_prior {
            Constellation::Gaussian => Ok(Prepared::Linear(LinearFilter::new(
                &real.c,
                detector.sigma2,
            )?)),
            Constellation::Discrete(d) => Ok(Prepared::Exhaustive {
                table: Table::new(d, &real.c)?,
                sigma2: finite_noise(detector.sigma2),
            }),
        }
    }

    /// Posterior mean of the postulated model.
    pub fn mean(&self, y: &CVec) -> CVec {
        match self {
            Prepared::Linear(f) => f.apply(y),
            Prepared::Exhaustive { table, sigma2 } => {
                let mut w = table.log_weights(y, *sigma2);
                normalize(&mut w);
                let mut m = CVec::zeros(table.e.len);
                for (i, wi) in w.iter().enumerate() {
                    if *wi > 0.0 {
                        m += table.e.vector(i) * Complex64::from(*wi);
                    }
                }
                m
            }
        }
    }

    /// Hard decisions on the true constellation.
    pub fn decide(&self, real: &ChannelRealization, y: &CVec, prior: &DiscretePrior) -> CVec {
        match self {
            Prepared::Linear(f) => {
                let est = f.apply(y);
                // undo the per-stream bias of the filter before slicing
                let gain = (&f.w * &real.c).diagonal();
                CVec::from_iterator(
                    est.len(),
                    est.iter()
                        .zip(gain.iter())
                        .map(|(v, g)| nearest(prior, v / g)),
                )
            }
            Prepared::Exhaustive { table, sigma2 } => marginal_argmax(table, y, *sigma2),
        }
    }
}

fn nearest(prior: &DiscretePrior, v: Complex64) -> Complex64 {
    *prior
        .points()
        .iter()
        .min_by(|a, b| (v - **a).norm_sqr().total_cmp(&(v - **b).norm_sqr()))
        .expect("constellation is nonempty")
}

fn marginal_argmax(table: &Table, y: &CVec, sigma2: f64) -> CVec {
    let e = &table.e;
    let mut w = table.log_weights(y, sigma2);
    normalize(&mut w);
    let n = e.points.len();
    let mut marg = vec![0.0; e.len * n];
    let mut d = vec![0; e.len];
    for (i, wi) in w.iter().enumerate() {
        e.digits(i, &mut d);
        for (m, &k) in d.iter().enumerate() {
            marg[m * n + k] += wi;
        }
    }
    CVec::from_iterator(
        e.len,
        (0..e.len).map(|m| {
            let row = &marg[m * n..(m + 1) * n];
            let k = (0..n)
                .max_by(|&a, &b| row[a].total_cmp(&row[b]))
                .unwrap_or(0);
            e.points[k]
        }),
    )
}

/// Posterior mean `<x'>` of the postulated model given the whitened output.
pub fn gpme(real: &ChannelRealization, y: &CVec, detector: &DetectorSpec) -> Result<CVec> {
    Ok(Prepared::new(real, detector)?.mean(y))
}

/// Symbol decisions of a detector from the whitened output `y`.
pub fn detect(
    real: &ChannelRealization,
    y: &CVec,
    detector: &DetectorSpec,
    constellation: &Constellation,
) -> Result<CVec> {
    let d = constellation.as_discrete().ok_or_else(|| {
        Error::UnsupportedPrior("hard decisions need a discrete constellation".into())
    })?;
    Ok(Prepared::new(real, detector)?.decide(real, y, d))
}

/// Individually optimal decisions under the true law.
pub fn map_symbols(real: &ChannelRealization, y: &CVec, prior: &DiscretePrior) -> Result<CVec> {
    Ok(marginal_argmax(&Table::new(prior, &real.c)?, y, 1.0))
}
