use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

const MOMENT_TOL: f64 = 1e-12;

/// Symmetry class of a discrete constellation, used to pick cheaper
/// integration paths. Every class is rotation invariant, which is all the
/// scalar channel needs because its noise is circular.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Equiprobable points on the unit circle spaced `2 pi / n` apart.
    Psk(usize),
    Generic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePrior {
    points: Vec<Complex64>,
    probs: Vec<f64>,
    shape: Shape,
}

impl DiscretePrior {
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Entropy of the prior in nats.
    pub fn entropy(&self) -> f64 {
        self.probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum()
    }
}

/// Channel-input prior: the standard circular complex Gaussian or a finite
/// zero-mean, unit-energy point set.
#[derive(Debug, Clone, PartialEq)]
pub enum Constellation {
    Gaussian,
    Discrete(DiscretePrior),
}

impl Constellation {
    pub fn gaussian() -> Self {
        Constellation::Gaussian
    }

    pub fn bpsk() -> Self {
        Self::psk(2).expect("bpsk is valid")
    }

    /// QPSK with points `(+-1 +- j)/sqrt(2)`.
    pub fn qpsk() -> Self {
        let s = FRAC_1_SQRT_2;
        let points = vec![
            Complex64::new(s, s),
            Complex64::new(-s, s),
            Complex64::new(-s, -s),
            Complex64::new(s, -s),
        ];
        Self::discrete(points, vec![0.25; 4]).expect("qpsk is valid")
    }

    /// Equiprobable `n`-PSK with a point at `1`.
    pub fn psk(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("psk needs at least 2 points"));
        }
        let points = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))
            .map(|z| Complex64::new(clean(z.re), clean(z.im)))
            .collect();
        Self::discrete(points, vec![1.0 / n as f64; n])
    }

    /// A validated discrete prior. Points with zero probability are kept.
    pub fn discrete(points: Vec<Complex64>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("constellation needs at least one point"));
        }
        if points.len() != probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} points but {} probabilities",
                points.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::invalid("probabilities must be nonnegative"));
        }
        if points
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::invalid("constellation points must be finite"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MOMENT_TOL {
            return Err(Error::invalid(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let mean: Complex64 = points.iter().zip(&probs).map(|(x, p)| x * p).sum();
        if mean.norm() > MOMENT_TOL {
            return Err(Error::invalid(format!(
                "constellation mean is {mean}, not zero"
            )));
        }
        let energy: f64 = points
            .iter()
            .zip(&probs)
            .map(|(x, p)| x.norm_sqr() * p)
            .sum();
        if (energy - 1.0).abs() > MOMENT_TOL {
            return Err(Error::invalid(format!(
                "constellation energy is {energy}, not 1"
            )));
        }
        let shape = classify(&points, &probs);
        Ok(Constellation::Discrete(DiscretePrior {
            points,
            probs,
            shape,
        }))
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Constellation::Gaussian)
    }

    pub fn as_discrete(&self) -> Option<&DiscretePrior> {
        match self {
            Constellation::Gaussian => None,
            Constellation::Discrete(d) => Some(d),
        }
    }

    /// Number of points, `None` for the Gaussian prior.
    pub fn cardinality(&self) -> Option<usize> {
        self.as_discrete().map(DiscretePrior::len)
    }

    pub fn shape(&self) -> Option<Shape> {
        self.as_discrete().map(DiscretePrior::shape)
    }
}

fn clean(x: f64) -> f64 {
    if x.abs() < 1e-15 {
        0.0
    } else {
        x
    }
}

fn classify(points: &[Complex64], probs: &[f64]) -> Shape {
    let n = points.len();
    if n < 2 {
        return Shape::Generic;
    }
    let uniform = probs
        .iter()
        .all(|&p| (p - 1.0 / n as f64).abs() < MOMENT_TOL);
    let unit = points.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12);
    if !uniform || !unit {
        return Shape::Generic;
    }
    let mut angles: Vec<f64> = points.iter().map(|z| z.arg()).collect();
    angles.sort_by(f64::total_cmp);
    let step = 2.0 * PI / n as f64;
    let evenly = (1..n).all(|i| (angles[i] - angles[i - 1] - step).abs() < 1e-9);
    if evenly {
        Shape::Psk(n)
    } else {
        Shape::Generic
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constellation::Gaussian => write!(f, "gaussian"),
            Constellation::Discrete(d) => match d.shape {
                Shape::Psk(2) => write!(f, "bpsk"),
                Shape::Psk(4) => write!(f, "qpsk"),
                Shape::Psk(n) => write!(f, "{n}psk"),
                Shape::Generic => write!(f, "discrete{}", d.len()),
            },
        }
    }
}

impl FromStr for Constellation {
    type Err = Error;

    /// Accepts `gaussian`, `bpsk`, `qpsk`, `8psk` and `psk<n>` / `<n>psk`.
    fn from_str(s: &str) -> Result<Self> {
        let name = s.trim().to_ascii_lowercase();
        match name.as_str() {
            "gaussian" | "gauss" => return Ok(Constellation::Gaussian),
            "bpsk" => return Ok(Self::bpsk()),
            "qpsk" => return Ok(Self::qpsk()),
            _ => {}
        }
        let digits = name
            .strip_suffix("psk")
            .or_else(|| name.strip_prefix("psk"))
            .map(|d| d.trim_matches(|c| c == '-' || c == ':'));
        match digits.and_then(|d| d.parse::<usize>().ok()) {
            Some(n) => Self::psk(n),
            None => Err(Error::UnsupportedPrior(format!(
                "unknown constellation '{s}'"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_unit_energy() {
        for c in [
            Constellation::bpsk(),
            Constellation::qpsk(),
            Constellation::psk(8).unwrap(),
        ] {
            let d = c.as_discrete().unwrap();
            let e: f64 = d
                .points()
                .iter()
                .zip(d.probs())
                .map(|(x, p)| x.norm_sqr() * p)
                .sum();
            assert!((e - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn shapes() {
        assert_eq!(Constellation::bpsk().shape(), Some(Shape::Psk(2)));
        assert_eq!(Constellation::qpsk().shape(), Some(Shape::Psk(4)));
        assert_eq!(Constellation::psk(8).unwrap().shape(), Some(Shape::Psk(8)));
        assert_eq!(Constellation::Gaussian.shape(), None);

        // 4-ASK style: zero mean, unit energy, not on a circle
        let a = (0.2f64).sqrt();
        let pam = Constellation::discrete(
            vec![
                Complex64::new(-3.0 * a, 0.0),
                Complex64::new(-a, 0.0),
                Complex64::new(a, 0.0),
                Complex64::new(3.0 * a, 0.0),
            ],
            vec![0.25; 4],
        )
        .unwrap();
        assert_eq!(pam.shape(), Some(Shape::Generic));
    }

    #[test]
    fn rejects_bad_moments() {
        let one = Complex64::new(1.0, 0.0);
        assert!(Constellation::discrete(vec![one], vec![1.0]).is_err());
        assert!(Constellation::discrete(vec![one, -one], vec![0.6, 0.4]).is_err());
        assert!(Constellation::discrete(vec![one * 2.0, -one * 2.0], vec![0.5, 0.5]).is_err());
        assert!(Constellation::discrete(vec![one, -one], vec![0.5]).is_err());
        assert!(Constellation::discrete(vec![one, -one], vec![1.5, -0.5]).is_err());
        assert!(Constellation::psk(1).is_err());
    }

    #[test]
    fn parse_and_display() {
        for name in ["gaussian", "bpsk", "qpsk", "8psk", "16psk"] {
            let c: Constellation = name.parse().unwrap();
            assert_eq!(c.to_string(), name);
        }
        assert_eq!("PSK8".parse::<Constellation>().unwrap().to_string(), "8psk");
        assert!("16qam".parse::<Constellation>().is_err());
    }

    #[test]
    fn qpsk_points() {
        let c = Constellation::qpsk();
        let d = c.as_discrete().unwrap();
        for x in d.points() {
            assert_eq!(x.re.abs(), FRAC_1_SQRT_2);
            assert_eq!(x.im.abs(), FRAC_1_SQRT_2);
        }
        assert!((d.entropy() - 4f64.ln()).abs() < 1e-15);
    }
}
