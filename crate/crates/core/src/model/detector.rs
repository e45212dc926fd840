use std::fmt;
use std::str::FromStr;

use super::Constellation;
use crate::error::{Error, Result};

/// Postulated noise variance of a posterior-mean detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    Finite(f64),
    /// `sigma^2 -> 0`: zero forcing.
    ZeroLimit,
    /// `sigma^2 -> infinity`: matched filter.
    InfinityLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    Jdd,
    Map,
    Lmmse,
    Mf,
    Zf,
    Custom,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 6] = [
        DetectorKind::Jdd,
        DetectorKind::Map,
        DetectorKind::Lmmse,
        DetectorKind::Mf,
        DetectorKind::Zf,
        DetectorKind::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Jdd => "jdd",
            DetectorKind::Map => "map",
            DetectorKind::Lmmse => "lmmse",
            DetectorKind::Mf => "mf",
            DetectorKind::Zf => "zf",
            DetectorKind::Custom => "custom",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidDetector(format!("unknown detector '{s}'")))
    }
}

/// A generalized posterior-mean estimator: the posterior mean under a
/// postulated prior and postulated noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSpec {
    pub postulated_prior: Constellation,
    pub sigma2: NoiseLevel,
    pub kind: DetectorKind,
}

impl DetectorSpec {
    pub fn jdd(prior: &Constellation) -> Self {
        Self {
            postulated_prior: prior.clone(),
            sigma2: NoiseLevel::Finite(1.0),
            kind: DetectorKind::Jdd,
        }
    }

    pub fn map(prior: &Constellation) -> Self {
        Self {
            postulated_prior: prior.clone(),
            sigma2: NoiseLevel::Finite(1.0),
            kind: DetectorKind::Map,
        }
    }

    pub fn lmmse() -> Self {
        Self {
            postulated_prior: Constellation::Gaussian,
            sigma2: NoiseLevel::Finite(1.0),
            kind: DetectorKind::Lmmse,
        }
    }

    pub fn mf() -> Self {
        Self {
            postulated_prior: Constellation::Gaussian,
            sigma2: NoiseLevel::InfinityLimit,
            kind: DetectorKind::Mf,
        }
    }

    pub fn zf() -> Self {
        Self {
            postulated_prior: Constellation::Gaussian,
            sigma2: NoiseLevel::ZeroLimit,
            kind: DetectorKind::Zf,
        }
    }

    pub fn custom(postulated_prior: Constellation, sigma2: NoiseLevel) -> Self {
        Self {
            postulated_prior,
            sigma2,
            kind: DetectorKind::Custom,
        }
    }

    /// The canonical detector of a kind for a given true prior. `Custom`
    /// falls back to the matched posterior mean.
    pub fn for_kind(kind: DetectorKind, prior: &Constellation) -> Self {
        match kind {
            DetectorKind::Jdd => Self::jdd(prior),
            DetectorKind::Map => Self::map(prior),
            DetectorKind::Lmmse => Self::lmmse(),
            DetectorKind::Mf => Self::mf(),
            DetectorKind::Zf => Self::zf(),
            DetectorKind::Custom => Self::custom(prior.clone(), NoiseLevel::Finite(1.0)),
        }
    }

    /// Checks the detector against the true prior.
    pub fn validate(&self, prior: &Constellation) -> Result<()> {
        if let NoiseLevel::Finite(s) = self.sigma2 {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidDetector(format!(
                    "postulated noise variance must be positive, got {s}"
                )));
            }
        }
        let gaussian = self.postulated_prior.is_gaussian();
        let ok = match self.kind {
            DetectorKind::Jdd | DetectorKind::Map => {
                self.postulated_prior == *prior && self.sigma2 == NoiseLevel::Finite(1.0)
            }
            DetectorKind::Lmmse => gaussian && self.sigma2 == NoiseLevel::Finite(1.0),
            DetectorKind::Mf => gaussian && self.sigma2 == NoiseLevel::InfinityLimit,
            DetectorKind::Zf => gaussian && self.sigma2 == NoiseLevel::ZeroLimit,
            DetectorKind::Custom => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDetector(format!(
                "{} detector with postulated prior {} and noise {:?} is inconsistent with true prior {}",
                self.kind, self.postulated_prior, self.sigma2, prior
            )))
        }
    }

    /// True when the postulated law equals the true one.
    pub fn is_matched(&self, prior: &Constellation) -> bool {
        self.postulated_prior == *prior && self.sigma2 == NoiseLevel::Finite(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_detectors_validate() {
        let q = Constellation::qpsk();
        for kind in DetectorKind::ALL {
            DetectorSpec::for_kind(kind, &q).validate(&q).unwrap();
        }
        let g = Constellation::Gaussian;
        DetectorSpec::map(&g).validate(&g).unwrap();
        assert!(DetectorSpec::map(&g).is_matched(&g));
        assert!(DetectorSpec::lmmse().is_matched(&g));
        assert!(!DetectorSpec::lmmse().is_matched(&q));
    }

    #[test]
    fn inconsistent_detectors() {
        let q = Constellation::qpsk();
        assert!(DetectorSpec::map(&Constellation::Gaussian)
            .validate(&q)
            .is_err());
        let mut zf = DetectorSpec::zf();
        zf.sigma2 = NoiseLevel::Finite(1.0);
        assert!(zf.validate(&q).is_err());
        let mut mf = DetectorSpec::mf();
        mf.postulated_prior = q.clone();
        assert!(mf.validate(&q).is_err());
        let bad = DetectorSpec::custom(q.clone(), NoiseLevel::Finite(-1.0));
        assert!(bad.validate(&q).is_err());
    }

    #[test]
    fn parse_kind() {
        assert_eq!(
            "LMMSE".parse::<DetectorKind>().unwrap(),
            DetectorKind::Lmmse
        );
        assert!("mmse".parse::<DetectorKind>().is_err());
        for k in DetectorKind::ALL {
            assert_eq!(k.name().parse::<DetectorKind>().unwrap(), k);
        }
    }
}
