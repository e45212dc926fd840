use crate::error::{Error, Result};

/// The `4K` order parameters. Index `k - 1` holds hop `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaState {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub nu: Vec<f64>,
    pub eps: Vec<f64>,
}

impl ReplicaState {
    pub fn zeros(hops: usize) -> Self {
        Self {
            xi: vec![0.0; hops],
            eta: vec![0.0; hops],
            nu: vec![0.0; hops],
            eps: vec![0.0; hops],
        }
    }

    pub fn hops(&self) -> usize {
        self.xi.len()
    }

    /// All entries nonnegative and finite, and the four blocks of equal length.
    pub fn is_valid(&self) -> bool {
        let k = self.xi.len();
        [&self.eta, &self.nu, &self.eps]
            .iter()
            .all(|v| v.len() == k)
            && self.values().all(|x| x >= 0.0 && x.is_finite())
    }

    pub(crate) fn check_hops(&self, hops: usize) -> Result<()> {
        if self.hops() != hops || !self.is_valid() {
            return Err(Error::DimensionMismatch(format!(
                "state must hold 4 x {hops} nonnegative entries"
            )));
        }
        Ok(())
    }

    /// Entries in the order `xi, eta, nu, eps`.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.xi
            .iter()
            .chain(&self.eta)
            .chain(&self.nu)
            .chain(&self.eps)
            .copied()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.values().collect()
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() % 4 != 0 || v.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "state vector length {} is not a positive multiple of 4",
                v.len()
            )));
        }
        let k = v.len() / 4;
        Ok(Self {
            xi: v[..k].to_vec(),
            eta: v[k..2 * k].to_vec(),
            nu: v[2 * k..3 * k].to_vec(),
            eps: v[3 * k..].to_vec(),
        })
    }

    /// `max_i |a_i - b_i| / max(1, |b_i|)`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.values()
            .zip(other.values())
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max)
    }

    pub(crate) fn blend(&self, target: &Self, damping: f64) -> Self {
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter()
                .zip(b)
                .map(|(x, y)| damping * y + (1.0 - damping) * x)
                .collect()
        };
        Self {
            xi: mix(&self.xi, &target.xi),
            eta: mix(&self.eta, &target.eta),
            nu: mix(&self.nu, &target.nu),
            eps: mix(&self.eps, &target.eps),
        }
    }
}

/// Initial first-hop MSE of the "decoded" start.
pub const HOT_START: f64 = 1e-6;

/// Starting point of the fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// `eps_1 = nu_1 = g`: nothing known about the input.
    Cold,
    /// `eps_1 = nu_1 = 1e-6`: input essentially decoded.
    Hot,
    Warm(ReplicaState),
    /// `eps_1 = nu_1` set to the given value.
    Start(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Weight of the new iterate, in `(0, 1]`.
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub init: Init,
    /// Extra log-spaced starts in `eps_1` used by
    /// [`solve_branches`](super::solve_branches); 0 disables them.
    pub dense_starts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-12,
            max_iter: 100_000,
            init: Init::Cold,
            dense_starts: 0,
        }
    }
}

impl SolverOptions {
    pub fn with_init(&self, init: Init) -> Self {
        Self {
            init,
            ..self.clone()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchLabel {
    Cold,
    Hot,
    Warm,
    Start(f64),
}

impl From<&Init> for BranchLabel {
    fn from(init: &Init) -> Self {
        match init {
            Init::Cold => BranchLabel::Cold,
            Init::Hot => BranchLabel::Hot,
            Init::Warm(_) => BranchLabel::Warm,
            Init::Start(e) => BranchLabel::Start(*e),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionBranch {
    pub state: ReplicaState,
    /// Free energy; `NaN` when it could not be evaluated.
    pub free_energy: f64,
    /// Largest relative violation of the fixed-point equations.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub label: BranchLabel,
    /// Postulated noise variance the state was solved at.
    pub sigma2: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_round_trip() {
        let s = ReplicaState {
            xi: vec![1.0, 2.0],
            eta: vec![3.0, 4.0],
            nu: vec![5.0, 6.0],
            eps: vec![7.0, 8.0],
        };
        let v = s.to_vec();
        assert_eq!(v, (1..=8).map(f64::from).collect::<Vec<_>>());
        assert_eq!(ReplicaState::from_slice(&v).unwrap(), s);
        assert!(ReplicaState::from_slice(&v[..7]).is_err());
    }

    #[test]
    fn validity_and_distance() {
        let mut s = ReplicaState::zeros(2);
        assert!(s.is_valid());
        let t = ReplicaState {
            xi: vec![0.5, 0.0],
            ..s.clone()
        };
        assert_eq!(t.distance(&s), 0.5);
        s.eps[1] = f64::NAN;
        assert!(!s.is_valid());
        s.eps[1] = -1.0;
        assert!(s.check_hops(2).is_err());
    }

    #[test]
    fn option_validation() {
        assert!(SolverOptions::default().validate().is_ok());
        for bad in [0.0, 1.5, f64::NAN] {
            let o = SolverOptions {
                damping: bad,
                ..Default::default()
            };
            assert!(o.validate().is_err());
        }
    }
}
