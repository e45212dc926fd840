use std::f64::consts::PI;

use super::state::{Init, ReplicaState, HOT_START};
use crate::error::Result;
use crate::model::{Constellation, NetworkConfig};
use crate::scalar::{cross_entropy_term, eps_actual, nu_actual, ScalarParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    /// All `4K` parameters updated independently.
    Full,
    /// Postulated law equals the true one: `xi = eta` and `nu = eps` enforced.
    Matched,
    /// Matched, with the first-hop parameters held at zero. Describes the
    /// noise-only entropy.
    Pinned,
}

/// One instance of the fixed-point system.
pub(crate) struct System<'a> {
    pub cfg: &'a NetworkConfig,
    pub p: &'a Constellation,
    pub q: &'a Constellation,
    pub sigma2: f64,
    pub mode: Mode,
}

impl System<'_> {
    fn hops(&self) -> usize {
        self.cfg.hops()
    }

    fn alpha(&self, i: usize, j: usize) -> f64 {
        self.cfg.ratio(i, j)
    }

    /// `nu_1, eps_1` from the scalar channels.
    fn first_hop(&self, xi1: f64, eta1: f64) -> Result<(f64, f64)> {
        let g = self.cfg.gain();
        match self.mode {
            Mode::Pinned => Ok((0.0, 0.0)),
            Mode::Matched => {
                let e = eps_actual(&ScalarParams::matched(g, eta1)?, self.p, self.p)?;
                Ok((e, e))
            }
            Mode::Full => {
                let params = ScalarParams::new(g, eta1, xi1)?;
                let nu = nu_actual(&params, self.p, self.q)?;
                let eps = eps_actual(&params, self.p, self.q)?;
                Ok((nu, eps))
            }
        }
    }

    pub fn initial_state(&self, init: &Init) -> ReplicaState {
        let start = match init {
            Init::Warm(s) => return s.clone(),
            Init::Cold => self.cfg.gain(),
            Init::Hot => HOT_START,
            Init::Start(e) => *e,
        };
        let k = self.hops();
        let mut s = ReplicaState::zeros(k);
        if self.mode != Mode::Pinned {
            s.eps[0] = start;
            s.nu[0] = start;
        }
        for i in 1..k {
            let a = self.cfg.hop_gain(i);
            s.eps[i] = a * (1.0 + s.eps[i - 1]);
            s.nu[i] = a * (self.sigma2 + s.nu[i - 1]);
        }
        self.constrain(&mut s);
        s
    }

    fn constrain(&self, s: &mut ReplicaState) {
        if self.mode != Mode::Full {
            s.xi.clone_from(&s.eta);
            s.nu.clone_from(&s.eps);
        }
        if self.mode == Mode::Pinned {
            s.xi[0] = 0.0;
            s.eta[0] = 0.0;
            s.nu[0] = 0.0;
            s.eps[0] = 0.0;
        }
    }

    /// One undamped update: the backward pass over `(xi, eta)` feeds the
    /// forward pass over `(nu, eps)`. With `jacobi` every right-hand side
    /// is evaluated at `s` instead, which is how the residual is measured.
    pub fn update(&self, s: &ReplicaState, jacobi: bool) -> Result<ReplicaState> {
        let k = self.hops();
        let sig = self.sigma2;
        let mut t = s.clone();

        let last = self.alpha(k - 1, k);
        t.xi[k - 1] = last / (sig + s.nu[k - 1]);
        t.eta[k - 1] = last / (1.0 + s.eps[k - 1]);
        for i in (0..k - 1).rev() {
            let a = self.cfg.hop_gain(i + 1);
            let al = self.alpha(i, i + 1);
            let (xn, en) = if jacobi {
                (s.xi[i + 1], s.eta[i + 1])
            } else {
                (t.xi[i + 1], t.eta[i + 1])
            };
            t.xi[i] = al * a * xn / (1.0 + a * xn * (sig + s.nu[i]));
            t.eta[i] = al * a * en / (1.0 + a * en * (1.0 + s.eps[i]));
        }
        if self.mode != Mode::Full {
            t.xi.clone_from(&t.eta);
        }
        if self.mode == Mode::Pinned {
            t.xi[0] = 0.0;
            t.eta[0] = 0.0;
        }

        let (xs, es) = if jacobi {
            (s.xi.clone(), s.eta.clone())
        } else {
            (t.xi.clone(), t.eta.clone())
        };
        let (nu1, eps1) = self.first_hop(xs[0], es[0])?;
        t.nu[0] = nu1;
        t.eps[0] = eps1;
        for i in 1..k {
            let a = self.cfg.hop_gain(i);
            let (np, ep) = if jacobi {
                (s.nu[i - 1], s.eps[i - 1])
            } else {
                (t.nu[i - 1], t.eps[i - 1])
            };
            let (sv, ev) = (sig + np, 1.0 + ep);
            t.nu[i] = a * sv / (1.0 + a * xs[i] * sv);
            t.eps[i] = match self.mode {
                Mode::Full => {
                    // error of the postulated linear hop estimator on the true hop
                    let d = 1.0 + a * xs[i] * sv;
                    a * (ev * es[i] + a * (sv * xs[i]).powi(2)) / (es[i] * d * d)
                }
                _ => a * ev / (1.0 + a * es[i] * ev),
            };
        }
        self.constrain(&mut t);
        Ok(t)
    }

    /// Free energy at an arbitrary positive state.
    pub fn free_energy(&self, s: &ReplicaState) -> Result<f64> {
        let k = self.hops();
        let sig = self.sigma2;
        let g = self.cfg.gain();
        let a0 = |j: usize| self.alpha(0, j);

        let mut f = a0(k)
            * (PI.ln() + (1.0 + s.eps[k - 1]) / (sig + s.nu[k - 1]) + (sig + s.nu[k - 1]).ln());
        let (xi1, eta1) = (s.xi[0], s.eta[0]);
        f += -xi1 / eta1 - (PI / xi1).ln();
        f += cross_entropy_term(&ScalarParams::new(g, eta1, xi1)?, self.p, self.q)?;
        for i in 0..k {
            let (x, e) = (s.xi[i], s.eta[i]);
            f -= a0(i) * (x * s.eps[i] - s.nu[i] * (x / e) * (x - e));
        }
        for j in 1..k {
            let a = self.cfg.hop_gain(j);
            let (xn, en) = (s.xi[j], s.eta[j]);
            let (nu, ep) = (s.nu[j - 1], s.eps[j - 1]);
            let d = 1.0 + a * xn * (sig + nu);
            f += a0(j) * (d.ln() + a * (xn / en) * (en * (1.0 + ep) - xn * (sig + nu)) / d);
        }
        Ok(f)
    }

    /// The matched entropy expression: `mi` plus the hop terms, evaluated on
    /// `(eta, eps)`.
    pub fn entropy(&self, s: &ReplicaState, mi: f64) -> f64 {
        let k = self.hops();
        let a0 = |j: usize| self.alpha(0, j);
        let mut h = mi + a0(k) * s.eps[k - 1].ln_1p() + a0(k) * (1.0 + PI.ln());
        for i in 0..k {
            h -= a0(i) * s.eta[i] * s.eps[i];
        }
        for j in 1..k {
            h += a0(j) * (self.cfg.hop_gain(j) * s.eta[j] * (s.eps[j - 1] + 1.0)).ln_1p();
        }
        h
    }
}
