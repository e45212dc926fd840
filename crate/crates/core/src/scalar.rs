//! The two decoupled scalar Gaussian channels
//! `z = sqrt(g) x + w / sqrt(eta)` (true law, prior `p`) and
//! `z = sqrt(g) x' + w' / sqrt(xi)` (postulated law, prior `q`),
//! with `w, w' ~ CN(0, 1)`.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Constellation, DiscretePrior, Shape};
use crate::quadrature::{adaptive, adaptive_n};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarParams {
    /// Effective gain `g = beta_0 rho_1`.
    pub gain: f64,
    /// Inverse noise variance of the true channel.
    pub eta: f64,
    /// Inverse noise variance of the postulated channel.
    pub xi: f64,
}

impl ScalarParams {
    pub fn new(gain: f64, eta: f64, xi: f64) -> Result<Self> {
        let p = Self { gain, eta, xi };
        p.check()?;
        Ok(p)
    }

    pub fn matched(gain: f64, eta: f64) -> Result<Self> {
        Self::new(gain, eta, eta)
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [("gain", self.gain), ("eta", self.eta), ("xi", self.xi)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "scalar channel {name} must be nonnegative and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Low-order joint moments of `(x, <x'>)` on the scalar channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMoments {
    /// `Re E{x <x'>^*}`.
    pub cross: f64,
    /// `E|<x'>|^2`.
    pub energy: f64,
    /// `E|x - <x'>|^2`.
    pub mse: f64,
}

/// Standard normal tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn log_cosh(a: f64) -> f64 {
    let a = a.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

fn one_minus_tanh(u: f64) -> f64 {
    2.0 / (1.0 + (2.0 * u).exp())
}

/// Posterior of a discrete prior given `z` on a channel with amplitude `sg`
/// and inverse noise variance `xi`.
struct Posterior {
    mean: Complex64,
    /// `E{|x'|^2 | z}`.
    second: f64,
    /// `ln sum_j q_j exp(-xi |z - sg x_j|^2)`.
    log_norm: f64,
}

fn posterior(z: Complex64, sg: f64, xi: f64, q: &DiscretePrior) -> Posterior {
    let expo = |x: &Complex64| -xi * (z - sg * x).norm_sqr();
    let top = q
        .points()
        .iter()
        .zip(q.probs())
        .filter(|(_, &p)| p > 0.0)
        .map(|(x, _)| expo(x))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut norm = 0.0;
    let mut mean = Complex64::new(0.0, 0.0);
    let mut second = 0.0;
    for (x, &p) in q.points().iter().zip(q.probs()) {
        if p > 0.0 {
            let w = p * (expo(x) - top).exp();
            norm += w;
            mean += x * w;
            second += x.norm_sqr() * w;
        }
    }
    Posterior {
        mean: mean / norm,
        second: second / norm,
        log_norm: top + norm.ln(),
    }
}

/// Generalized posterior mean `<x'>` of the postulated channel at output `z`.
pub fn gpme_scalar(z: Complex64, params: &ScalarParams, q: &Constellation) -> Complex64 {
    let ScalarParams { gain: g, xi, .. } = *params;
    if xi == 0.0 || g == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    match q {
        Constellation::Gaussian => z * (g.sqrt() * xi / (1.0 + g * xi)),
        Constellation::Discrete(d) => posterior(z, g.sqrt(), xi, d).mean,
    }
}

/// Linear-estimator MSE scaled by the gain:
/// `g (eta + g xi^2) / (eta (1 + g xi)^2)`.
pub fn eps_linear(params: &ScalarParams) -> Result<f64> {
    params.check()?;
    let ScalarParams { gain: g, eta, xi } = *params;
    if eta == 0.0 {
        return Err(Error::SingularInput(
            "linear estimator MSE needs eta > 0".into(),
        ));
    }
    Ok(g * (eta + g * xi * xi) / (eta * (1.0 + g * xi).powi(2)))
}

/// `g E|x - <x'>|^2` with `x ~ p` sent over the true channel and `<x'>`
/// computed under `q` and `xi`.
pub fn eps_actual(params: &ScalarParams, p: &Constellation, q: &Constellation) -> Result<f64> {
    eps_impl(params, p, q, true)
}

fn eps_impl(
    params: &ScalarParams,
    p: &Constellation,
    q: &Constellation,
    fast: bool,
) -> Result<f64> {
    params.check()?;
    let ScalarParams { gain: g, eta, xi } = *params;
    if g == 0.0 {
        return Ok(0.0);
    }
    if xi == 0.0 {
        return Ok(g);
    }
    if q.is_gaussian() {
        // the linear estimator only sees second moments of p
        return eps_linear(params);
    }
    if eta == 0.0 {
        return Err(Error::SingularInput(
            "nonlinear estimator on a channel with eta = 0".into(),
        ));
    }
    if fast && p == q {
        match p.shape() {
            Some(Shape::Psk(4)) => {
                let (m, s) = (xi * g, xi * (g / eta).sqrt());
                return adaptive(|r| r.expect(|t| one_minus_tanh(m + s * t).powi(2)))
                    .map(|v| g * v);
            }
            Some(Shape::Psk(2)) => {
                let (m, s) = (2.0 * xi * g, xi * (2.0 * g / eta).sqrt());
                return adaptive(|r| r.expect(|t| one_minus_tanh(m + s * t).powi(2)))
                    .map(|v| g * v);
            }
            _ => {}
        }
    }
    moments_generic(params, p, q).map(|m| g * m.mse)
}

/// `g E|x' - <x'>|^2` on the postulated channel, i.e. the matched MMSE of
/// `q` at inverse noise variance `xi`.
pub fn nu_posterior(params: &ScalarParams, q: &Constellation) -> Result<f64> {
    params.check()?;
    let ScalarParams { gain: g, xi, .. } = *params;
    if g == 0.0 {
        return Ok(0.0);
    }
    match q {
        Constellation::Gaussian => Ok(g / (1.0 + g * xi)),
        Constellation::Discrete(_) => eps_actual(
            &ScalarParams {
                gain: g,
                eta: xi,
                xi,
            },
            q,
            q,
        ),
    }
}

/// `g E|x' - <x'>|^2` with `x'` drawn from the postulated posterior and the
/// output `z` from the true channel. This is the value that makes the free
/// energy stationary; it equals [`nu_posterior`] when `q` is Gaussian or
/// when `xi = eta` and `p = q`.
pub fn nu_actual(params: &ScalarParams, p: &Constellation, q: &Constellation) -> Result<f64> {
    params.check()?;
    let ScalarParams { gain: g, eta, xi } = *params;
    if g == 0.0 {
        return Ok(0.0);
    }
    let d = match q {
        Constellation::Gaussian => return Ok(g / (1.0 + g * xi)),
        Constellation::Discrete(d) => d,
    };
    if xi == 0.0 {
        return Ok(g);
    }
    if xi == eta && p == q {
        return eps_actual(params, p, q);
    }
    if eta == 0.0 {
        return Err(Error::SingularInput(
            "posterior variance on a channel with eta = 0".into(),
        ));
    }
    let sg = g.sqrt();
    let var = |z: Complex64| {
        let post = posterior(z, sg, xi, d);
        [post.second - post.mean.norm_sqr()]
    };
    let [v] = match p {
        Constellation::Gaussian => over_gaussian_output(g + 1.0 / eta, var)?,
        Constellation::Discrete(pd) => over_channel(g, eta, pd, reducible(pd, q), |_, z| var(z))?,
    };
    Ok(g * v.max(0.0))
}

/// Joint moments of `(x, <x'>)`.
pub fn scalar_moments(
    params: &ScalarParams,
    p: &Constellation,
    q: &Constellation,
) -> Result<ScalarMoments> {
    params.check()?;
    let ScalarParams { gain: g, eta, xi } = *params;
    if g == 0.0 || xi == 0.0 {
        return Ok(ScalarMoments {
            cross: 0.0,
            energy: 0.0,
            mse: 1.0,
        });
    }
    if eta == 0.0 {
        return Err(Error::SingularInput(
            "estimator moments on a channel with eta = 0".into(),
        ));
    }
    if q.is_gaussian() {
        let c = g.sqrt() * xi / (1.0 + g * xi);
        let cross = c * g.sqrt();
        let energy = c * c * (g + 1.0 / eta);
        return Ok(ScalarMoments {
            cross,
            energy,
            mse: 1.0 - 2.0 * cross + energy,
        });
    }
    moments_generic(params, p, q)
}

/// Symmetric point sets let the expectation condition on a single point.
fn reducible(p: &DiscretePrior, q: &Constellation) -> bool {
    matches!(p.shape(), Shape::Psk(_))
        && match q {
            Constellation::Gaussian => true,
            Constellation::Discrete(d) => d == p,
        }
}

/// `sum_i p_i E_w f(x_i, sqrt(g) x_i + w / sqrt(eta))` by tensor-product
/// Gauss-Hermite, with order refinement.
fn over_channel<const N: usize>(
    g: f64,
    eta: f64,
    p: &DiscretePrior,
    reduce: bool,
    f: impl Fn(Complex64, Complex64) -> [f64; N],
) -> Result<[f64; N]> {
    let sg = g.sqrt();
    let sn = eta.sqrt().recip();
    let terms: Vec<(Complex64, f64)> = if reduce {
        vec![(p.points()[0], 1.0)]
    } else {
        p.points()
            .iter()
            .zip(p.probs())
            .filter(|(_, &w)| w > 0.0)
            .map(|(&x, &w)| (x, w))
            .collect()
    };
    adaptive_n(|rule| {
        let mut acc = [0.0; N];
        for &(x, w) in &terms {
            let v = rule.expect_complex_n(|n| f(x, sg * x + n * sn));
            for (a, b) in acc.iter_mut().zip(v) {
                *a += w * b;
            }
        }
        acc
    })
}

/// `E f(z)` for `z ~ CN(0, var)`.
fn over_gaussian_output<const N: usize>(
    var: f64,
    f: impl Fn(Complex64) -> [f64; N],
) -> Result<[f64; N]> {
    let s = var.sqrt();
    adaptive_n(|rule| rule.expect_complex_n(|n| f(n * s)))
}

fn moments_generic(
    params: &ScalarParams,
    p: &Constellation,
    q: &Constellation,
) -> Result<ScalarMoments> {
    let ScalarParams { gain: g, eta, xi } = *params;
    let sg = g.sqrt();
    let est = |z: Complex64| gpme_scalar(z, params, q);
    let [cross, energy, mse] = match p {
        Constellation::Gaussian => {
            // x | z is Gaussian with mean m z and variance 1/(1 + g eta)
            let var = g + 1.0 / eta;
            let m = sg / var;
            let [cross, energy, gap] = over_gaussian_output(var, |z| {
                let e = est(z);
                let cond = z * m;
                [(cond * e.conj()).re, e.norm_sqr(), (cond - e).norm_sqr()]
            })?;
            [cross, energy, 1.0 / (1.0 + g * eta) + gap]
        }
        Constellation::Discrete(d) => over_channel(g, eta, d, reducible(d, q), |x, z| {
            let e = est(z);
            [(x * e.conj()).re, e.norm_sqr(), (x - e).norm_sqr()]
        })?,
    };
    let _ = xi;
    Ok(ScalarMoments { cross, energy, mse })
}

/// Mutual information `I(z; x)` of the true channel in nats.
pub fn scalar_mi(g: f64, eta: f64, p: &Constellation) -> Result<f64> {
    mi_impl(g, eta, p, true)
}

fn mi_impl(g: f64, eta: f64, p: &Constellation, fast: bool) -> Result<f64> {
    ScalarParams::matched(g, eta)?;
    if g == 0.0 || eta == 0.0 {
        return Ok(0.0);
    }
    let s = g * eta;
    let d = match p {
        Constellation::Gaussian => return Ok(s.ln_1p()),
        Constellation::Discrete(d) => d,
    };
    if fast {
        match d.shape() {
            Shape::Psk(4) => {
                let e = adaptive(|r| r.expect(|t| log_cosh(s + s.sqrt() * t)))?;
                return Ok(2.0 * s - 2.0 * e);
            }
            Shape::Psk(2) => {
                let s2 = 2.0 * s;
                let e = adaptive(|r| r.expect(|t| log_cosh(s2 + s2.sqrt() * t)))?;
                return Ok(s2 - e);
            }
            _ => {}
        }
    }
    // -E ln sum_j p_j exp(-|sqrt(s)(x - x_j) + n|^2 + |n|^2), n ~ CN(0, 1)
    let ss = s.sqrt();
    let reduce = matches!(d.shape(), Shape::Psk(_));
    let [v] = over_channel(1.0, 1.0, d, reduce, |x, z| {
        let n = z - x;
        let base = n.norm_sqr();
        let expo = |xj: &Complex64| base - (ss * (x - xj) + n).norm_sqr();
        let top = d
            .points()
            .iter()
            .map(expo)
            .fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = d
            .points()
            .iter()
            .zip(d.probs())
            .map(|(xj, &pj)| pj * (expo(xj) - top).exp())
            .sum();
        [-(top + sum.ln())]
    })?;
    Ok(v)
}

/// Separate-decoding rate `-int p(z) ln p(z) dz - ln(pi e / eta)`, evaluated
/// through the output density of the true channel.
pub fn sd_rate_scalar(g: f64, eta: f64, p: &Constellation) -> Result<f64> {
    ScalarParams::matched(g, eta)?;
    if eta == 0.0 || g == 0.0 {
        return Ok(0.0);
    }
    let h = output_entropy(g, eta, p)?;
    Ok(h - (PI * std::f64::consts::E / eta).ln())
}

/// Differential entropy of the true channel output.
fn output_entropy(g: f64, eta: f64, p: &Constellation) -> Result<f64> {
    match p {
        Constellation::Gaussian => Ok((PI * std::f64::consts::E * (g + 1.0 / eta)).ln()),
        Constellation::Discrete(d) => {
            let sg = g.sqrt();
            let reduce = matches!(d.shape(), Shape::Psk(_));
            let [v] = over_channel(g, eta, d, reduce, |_, z| {
                [-((eta / PI).ln() + posterior(z, sg, eta, d).log_norm)]
            })?;
            Ok(v)
        }
    }
}

/// Cross entropy `-int p(z; eta) ln q(z; xi) dz` between the output
/// densities of the true and postulated channels.
pub fn cross_entropy_term(
    params: &ScalarParams,
    p: &Constellation,
    q: &Constellation,
) -> Result<f64> {
    ce_impl(params, p, q, true)
}

fn ce_impl(params: &ScalarParams, p: &Constellation, q: &Constellation, fast: bool) -> Result<f64> {
    params.check()?;
    let ScalarParams { gain: g, eta, xi } = *params;
    if eta == 0.0 || xi == 0.0 {
        return Err(Error::SingularInput(
            "cross entropy needs eta > 0 and xi > 0".into(),
        ));
    }
    let d = match q {
        Constellation::Gaussian => {
            let v = g + 1.0 / xi;
            return Ok((PI * v).ln() + (g + 1.0 / eta) / v);
        }
        Constellation::Discrete(d) => d,
    };
    let head = -(xi / PI).ln();
    if fast && p == q && g > 0.0 {
        match d.shape() {
            Shape::Psk(4) => {
                let (m, s) = (xi * g, xi * (g / eta).sqrt());
                let e = adaptive(|r| r.expect(|t| log_cosh(m + s * t)))?;
                return Ok(head + 2.0 * xi * g + xi / eta - 2.0 * e);
            }
            Shape::Psk(2) => {
                let (m, s) = (2.0 * xi * g, xi * (2.0 * g / eta).sqrt());
                let e = adaptive(|r| r.expect(|t| log_cosh(m + s * t)))?;
                return Ok(head + 2.0 * xi * g + xi / eta - e);
            }
            _ => {}
        }
    }
    let sg = g.sqrt();
    let neg_log_q = |z: Complex64| head - posterior(z, sg, xi, d).log_norm;
    let [v] = match p {
        Constellation::Gaussian => over_gaussian_output(g + 1.0 / eta, |z| [neg_log_q(z)])?,
        Constellation::Discrete(pd) => {
            over_channel(g, eta, pd, reducible(pd, q), |_, z| [neg_log_q(z)])?
        }
    };
    Ok(v)
}
