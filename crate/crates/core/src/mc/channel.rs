use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::NetworkConfig;

type CMat = DMatrix<Complex64>;

/// One draw of the hop matrices with the derived end-to-end quantities.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `H_1..H_K`, with `H_k` of shape `M_k x M_{k-1}`.
    pub hops: Vec<CMat>,
    /// `H_K ... H_1`.
    pub g_end: CMat,
    /// `I + sum_k G_k G_k^H` over the relay noise paths `G_k = H_K ... H_{k+1}`.
    pub noise_cov: CMat,
    /// `noise_cov^{-1/2}`.
    pub whitener: CMat,
    /// Whitened end-to-end channel `noise_cov^{-1/2} g_end`.
    pub c: CMat,
}

pub(crate) fn complex_normal(rng: &mut impl Rng, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    Complex64::new(a * s, b * s)
}

pub(crate) fn complex_normal_vec(rng: &mut impl Rng, n: usize) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_fn(n, |_, _| complex_normal(rng, 1.0))
}

/// Hermitian inverse square root by eigendecomposition.
pub(crate) fn inv_sqrt_hermitian(m: &CMat) -> Result<CMat> {
    let eig = m.clone().symmetric_eigen();
    if let Some(&l) = eig.eigenvalues.iter().find(|&&l| !(l > 0.0)) {
        return Err(Error::SingularMatrix(format!(
            "noise covariance has eigenvalue {l:e}"
        )));
    }
    let d = CMat::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from(l.sqrt().recip())));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

impl ChannelRealization {
    /// Derives the end-to-end quantities from given hop matrices.
    pub fn from_hops(hops: Vec<CMat>) -> Result<Self> {
        if hops.is_empty() {
            return Err(Error::invalid("need at least one hop matrix"));
        }
        for w in hops.windows(2) {
            if w[1].ncols() != w[0].nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "hop of shape {}x{} cannot follow hop of shape {}x{}",
                    w[1].nrows(),
                    w[1].ncols(),
                    w[0].nrows(),
                    w[0].ncols()
                )));
            }
        }
        let k = hops.len();
        let mk = hops[k - 1].nrows();
        let mut noise_cov = CMat::identity(mk, mk);
        // tail = H_K ... H_{j+1}, grown from the right end of the chain
        let mut tail = CMat::identity(mk, mk);
        for j in (1..k).rev() {
            tail = &tail * &hops[j];
            noise_cov += &tail * tail.adjoint();
        }
        let g_end = &tail * &hops[0];
        let whitener = inv_sqrt_hermitian(&noise_cov)?;
        let c = &whitener * &g_end;
        Ok(Self {
            hops,
            g_end,
            noise_cov,
            whitener,
            c,
        })
    }

    /// Draws every hop with i.i.d. circular Gaussian entries of the
    /// configured variance.
    pub fn sample(cfg: &NetworkConfig, rng: &mut impl Rng) -> Self {
        let m = cfg.antennas();
        let hops = (1..=cfg.hops())
            .map(|k| {
                let var = cfg.entry_variance(k);
                CMat::from_fn(m[k], m[k - 1], |_, _| complex_normal(rng, var))
            })
            .collect();
        Self::from_hops(hops).expect("sampled covariance is positive definite")
    }

    /// Source antenna count `M_0`.
    pub fn inputs(&self) -> usize {
        self.c.ncols()
    }

    /// Destination antenna count `M_K`.
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Received vector before whitening, for input `x` and fresh noise on
    /// every hop.
    pub fn transmit(
        &self,
        x: &nalgebra::DVector<Complex64>,
        rng: &mut impl Rng,
    ) -> nalgebra::DVector<Complex64> {
        let mut y = x.clone();
        for h in &self.hops {
            y = h * y;
            let n = y.len();
            y += complex_normal_vec(rng, n);
        }
        y
    }
}

/// Deterministic realization for `seed`.
pub fn sample_realization(cfg: &NetworkConfig, seed: u64) -> ChannelRealization {
    ChannelRealization::sample(cfg, &mut super::trial_rng(seed, 0))
}
