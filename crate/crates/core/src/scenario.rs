//! Scenario files: a network, an input prior, detectors and an optional sweep,
//! written as TOML.
//!
//! ```toml
//! hops = 3
//! antennas = [8, 8, 8, 8]
//! snr_db = [0.0, 20.0, 20.0]   # or one value for every hop
//! beta = "auto"                # or an explicit list
//! channel_norm = "transmit_side"
//! constellation = "qpsk"      # or a list
//! detector = ["map", "lmmse"]  # or a single name
//!
//! [sweep]
//! variable = "rho1_db"
//! grid = { start = -10.0, stop = 30.0, step = 5.0 }
//! ```

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::McOptions;
use crate::model::{
    apply_pathloss, build_network, db_to_linear, BetaMode, ChannelNorm, Constellation,
    DetectorKind, DetectorSpec, NetworkConfig, NoiseLevel, PathlossModel,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Named(String),
    List(Vec<f64>),
}

impl Default for BetaSpec {
    fn default() -> Self {
        BetaSpec::Named("auto".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathlossSpec {
    /// Per-hop distances. Ignored when sweeping the total distance.
    #[serde(default)]
    pub distances: Vec<f64>,
    pub exponent: f64,
    pub base_snr_db: f64,
}

/// Postulated prior and noise level of a `custom` detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostulateSpec {
    pub constellation: String,
    pub sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// First-hop SNR in dB; the other hops keep their configured SNR.
    Rho1Db,
    /// Common SNR in dB, multiplied per hop by `snr_scale`.
    RhoAllDb,
    /// Source-destination distance with equidistant terminals.
    Distance,
    /// Same antenna count at every terminal.
    AntennasUniform,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Rho1Db => "rho1_db",
            SweepVariable::RhoAllDb => "rho_all_db",
            SweepVariable::Distance => "distance",
            SweepVariable::AntennasUniform => "antennas_uniform",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDirection {
    Up,
    Down,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl GridSpec {
    /// Grid values; a range includes `stop` when it falls on the lattice.
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            GridSpec::List(v) => v.clone(),
            &GridSpec::Range { start, stop, step } => {
                if !(step != 0.0 && step.is_finite() && (stop - start) / step >= 0.0) {
                    return Err(Error::Scenario(format!(
                        "range from {start} to {stop} with step {step} is empty"
                    )));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                // trims the accumulated representation error of start + i * step
                (0..=n)
                    .map(|i| round_to(start + step * i as f64, 12))
                    .collect()
            }
        };
        check_grid(&v)?;
        Ok(v)
    }
}

fn round_to(x: f64, digits: i32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

/// Rejects empty grids and grids that are not strictly monotone.
pub fn check_grid(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Scenario("sweep grid is empty".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Scenario("sweep grid has a non-finite value".into()));
    }
    let up = v.windows(2).all(|w| w[1] > w[0]);
    let down = v.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::Scenario(
            "sweep grid must be strictly monotone".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: GridSpec,
    /// Continuation sweep for branch tracking; none by default.
    #[serde(default)]
    pub direction: Option<SweepDirection>,
    /// Per-hop multipliers for `rho_all_db`.
    #[serde(default)]
    pub snr_scale: Option<Vec<f64>>,
    /// Hop counts compared by a distance sweep.
    #[serde(default)]
    pub hop_counts: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub trials: usize,
    #[serde(default = "default_per_trial")]
    pub per_trial: usize,
}

fn default_per_trial() -> usize {
    crate::mc::BER_VECTORS
}

impl McSpec {
    pub fn options(&self, seed: u64) -> McOptions {
        McOptions::new(self.trials, self.per_trial, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub hops: usize,
    pub antennas: Vec<usize>,
    pub snr_db: OneOrMany<f64>,
    #[serde(default)]
    pub beta: BetaSpec,
    #[serde(default)]
    pub channel_norm: ChannelNorm,
    #[serde(default = "default_constellation")]
    pub constellation: OneOrMany<String>,
    #[serde(default = "default_detector")]
    pub detector: OneOrMany<String>,
    #[serde(default)]
    pub postulate: Option<PostulateSpec>,
    #[serde(default)]
    pub pathloss: Option<PathlossSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub mc: Option<McSpec>,
}

fn default_constellation() -> OneOrMany<String> {
    OneOrMany::One("gaussian".into())
}

fn default_detector() -> OneOrMany<String> {
    OneOrMany::One("jdd".into())
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(s).map_err(|e| Error::Scenario(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        text.parse()
            .map_err(|e: Error| Error::Scenario(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Checks everything that can be checked without a sweep value.
    pub fn validate(&self) -> Result<()> {
        self.network()?;
        for p in self.priors()? {
            self.detectors_for(&p)?;
        }
        if let Some(sw) = &self.sweep {
            let grid = sw.grid.values()?;
            if let Some(s) = &sw.snr_scale {
                if s.len() != self.hops || s.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                    return Err(Error::Scenario(format!(
                        "snr_scale needs {} positive entries",
                        self.hops
                    )));
                }
            }
            if sw.variable == SweepVariable::Distance && self.pathloss.is_none() {
                return Err(Error::Scenario(
                    "a distance sweep needs a [pathloss] table".into(),
                ));
            }
            for &k in sw.hop_counts.iter().flatten() {
                if k == 0 {
                    return Err(Error::Scenario(
                        "hop_counts entries must be positive".into(),
                    ));
                }
            }
            for &v in &grid {
                self.network_at(v)?;
            }
        }
        if let Some(mc) = &self.mc {
            mc.options(0).validate()?;
        }
        Ok(())
    }

    /// The first listed input prior.
    pub fn prior(&self) -> Result<Constellation> {
        Ok(self.priors()?.swap_remove(0))
    }

    pub fn priors(&self) -> Result<Vec<Constellation>> {
        let v = self.constellation.to_vec();
        if v.is_empty() {
            return Err(Error::Scenario("no constellation given".into()));
        }
        v.iter().map(|s| s.parse()).collect()
    }

    pub fn detector_kinds(&self) -> Result<Vec<DetectorKind>> {
        let v: Result<Vec<_>> = self.detector.to_vec().iter().map(|s| s.parse()).collect();
        let v = v?;
        if v.is_empty() {
            return Err(Error::Scenario("no detector given".into()));
        }
        Ok(v)
    }

    /// Detector specs in the order listed, validated against the first prior.
    pub fn detectors(&self) -> Result<Vec<(DetectorKind, DetectorSpec)>> {
        self.detectors_for(&self.prior()?)
    }

    pub fn detectors_for(
        &self,
        prior: &Constellation,
    ) -> Result<Vec<(DetectorKind, DetectorSpec)>> {
        self.detector_kinds()?
            .into_iter()
            .map(|k| {
                let spec = match k {
                    DetectorKind::Custom => {
                        let p = self.postulate.as_ref().ok_or_else(|| {
                            Error::Scenario("a custom detector needs a [postulate] table".into())
                        })?;
                        DetectorSpec::custom(p.constellation.parse()?, NoiseLevel::Finite(p.sigma2))
                    }
                    k => DetectorSpec::for_kind(k, prior),
                };
                spec.validate(prior)?;
                Ok((k, spec))
            })
            .collect()
    }

    fn beta_mode(&self) -> Result<BetaMode> {
        match &self.beta {
            BetaSpec::Named(s) if s.eq_ignore_ascii_case("auto") => Ok(BetaMode::Auto),
            BetaSpec::Named(s) => Err(Error::Scenario(format!(
                "beta must be \"auto\" or a list, got \"{s}\""
            ))),
            BetaSpec::List(v) => Ok(BetaMode::Explicit(v.clone())),
        }
    }

    fn snr_linear(&self, hops: usize) -> Result<Vec<f64>> {
        match &self.snr_db {
            OneOrMany::One(db) => Ok(vec![db_to_linear(*db); hops]),
            OneOrMany::Many(v) if v.len() == hops => {
                Ok(v.iter().map(|&d| db_to_linear(d)).collect())
            }
            OneOrMany::Many(v) => Err(Error::Scenario(format!(
                "snr_db has {} entries for {hops} hops",
                v.len()
            ))),
        }
    }

    fn pathloss_model(&self) -> Option<Result<PathlossModel>> {
        let p = self.pathloss.as_ref()?;
        if p.distances.is_empty() {
            return None;
        }
        Some(Ok(PathlossModel {
            distances: p.distances.clone(),
            exponent: p.exponent,
            base_snr: db_to_linear(p.base_snr_db),
        }))
    }

    /// The network described by the file, with pathloss applied when
    /// distances are given.
    pub fn network(&self) -> Result<NetworkConfig> {
        let cfg = build_network(
            self.hops,
            &self.antennas,
            &self.snr_linear(self.hops)?,
            self.beta_mode()?,
            self.channel_norm,
        )?;
        match self.pathloss_model() {
            Some(m) => apply_pathloss(&cfg, &m?),
            None => Ok(cfg),
        }
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        self.sweep_spec()?.grid.values()
    }

    pub fn sweep_spec(&self) -> Result<&SweepSpec> {
        self.sweep
            .as_ref()
            .ok_or_else(|| Error::Scenario("no [sweep] table".into()))
    }

    /// The network at sweep value `v`.
    pub fn network_at(&self, v: f64) -> Result<NetworkConfig> {
        let sw = self.sweep_spec()?;
        match sw.variable {
            SweepVariable::Distance => self.network_at_distance(self.hops, v),
            SweepVariable::Rho1Db => {
                let base = self.network()?;
                let mut snr = base.snr().to_vec();
                snr[0] = db_to_linear(v);
                base.with_snr(&snr)
            }
            SweepVariable::RhoAllDb => {
                let base = self.network()?;
                let r = db_to_linear(v);
                let snr: Vec<f64> = match &sw.snr_scale {
                    Some(s) => s.iter().map(|c| c * r).collect(),
                    None => vec![r; self.hops],
                };
                base.with_snr(&snr)
            }
            SweepVariable::AntennasUniform => {
                if !(v >= 1.0 && v.fract() == 0.0) {
                    return Err(Error::Scenario(format!(
                        "antennas_uniform needs positive integers, got {v}"
                    )));
                }
                self.network()?
                    .with_antennas(&vec![v as usize; self.hops + 1])
            }
        }
    }

    /// Network with `hops` equidistant hops spanning distance `d`. Every
    /// terminal gets `antennas[0]` antennas, so the antenna list must be
    /// uniform.
    pub fn network_at_distance(&self, hops: usize, d: f64) -> Result<NetworkConfig> {
        let p = self
            .pathloss
            .as_ref()
            .ok_or_else(|| Error::Scenario("a distance sweep needs a [pathloss] table".into()))?;
        let m = self.antennas[0];
        if self.antennas.iter().any(|&a| a != m) {
            return Err(Error::Scenario(
                "a distance sweep needs the same antenna count at every terminal".into(),
            ));
        }
        let model = PathlossModel::equidistant(d, hops, p.exponent, db_to_linear(p.base_snr_db));
        let beta = match self.beta_mode()? {
            BetaMode::Auto => BetaMode::Auto,
            BetaMode::Explicit(_) => {
                return Err(Error::Scenario(
                    "a distance sweep needs beta = \"auto\"".into(),
                ))
            }
        };
        build_network(
            hops,
            &vec![m; hops + 1],
            &model.snr()?,
            beta,
            self.channel_norm,
        )
    }

    pub fn hop_counts(&self) -> Vec<usize> {
        self.sweep
            .as_ref()
            .and_then(|s| s.hop_counts.clone())
            .unwrap_or_else(|| vec![self.hops])
    }
}
