use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which antenna count normalizes the per-entry channel variance of hop `k`.
///
/// `TransmitSide` gives `rho_k beta_{k-1} / M_{k-1}`, the normalization under
/// which the fixed-point equations are derived. `ReceiveSide` gives
/// `rho_k beta_{k-1} / M_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelNorm {
    #[default]
    #[serde(alias = "transmit")]
    TransmitSide,
    #[serde(alias = "receive")]
    ReceiveSide,
}

/// How the amplification constants `beta_0..beta_{K-1}` are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaMode {
    /// Long-term power normalization: the source sends unit power
    /// (`beta_0 = 1`) and relay `k` scales by `beta_k = 1 / (1 + rho_k)`.
    Auto,
    Explicit(Vec<f64>),
}

/// A validated K-hop network. Immutable once built; use the `with_*`
/// methods to derive modified copies.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    antennas: Vec<usize>,
    snr: Vec<f64>,
    beta: Vec<f64>,
    beta_auto: bool,
    channel_norm: ChannelNorm,
}

/// Builds a network from hop count, antenna counts `M_0..M_K`, linear
/// per-hop SNRs `rho_1..rho_K` and a beta mode.
pub fn build_network(
    hops: usize,
    antennas: &[usize],
    snr: &[f64],
    beta_mode: BetaMode,
    channel_norm: ChannelNorm,
) -> Result<NetworkConfig> {
    if hops == 0 {
        return Err(Error::invalid("hop count must be at least 1"));
    }
    if antennas.len() != hops + 1 {
        return Err(Error::DimensionMismatch(format!(
            "antennas must have K+1 = {} entries, got {}",
            hops + 1,
            antennas.len()
        )));
    }
    if snr.len() != hops {
        return Err(Error::DimensionMismatch(format!(
            "snr must have K = {} entries, got {}",
            hops,
            snr.len()
        )));
    }
    if let Some(i) = antennas.iter().position(|&m| m == 0) {
        return Err(Error::invalid(format!(
            "antenna count M_{i} must be positive"
        )));
    }
    if let Some(i) = snr.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::invalid(format!(
            "snr rho_{} must be positive and finite, got {}",
            i + 1,
            snr[i]
        )));
    }
    let (beta, beta_auto) = match beta_mode {
        BetaMode::Auto => (auto_beta(snr), true),
        BetaMode::Explicit(b) => {
            if b.len() != hops {
                return Err(Error::DimensionMismatch(format!(
                    "beta must have K = {} entries, got {}",
                    hops,
                    b.len()
                )));
            }
            if let Some(i) = b.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::invalid(format!(
                    "beta_{i} must be positive and finite, got {}",
                    b[i]
                )));
            }
            (b, false)
        }
    };
    Ok(NetworkConfig {
        antennas: antennas.to_vec(),
        snr: snr.to_vec(),
        beta,
        beta_auto,
        channel_norm,
    })
}

fn auto_beta(snr: &[f64]) -> Vec<f64> {
    std::iter::once(1.0)
        .chain(snr[..snr.len() - 1].iter().map(|&r| 1.0 / (1.0 + r)))
        .collect()
}

impl NetworkConfig {
    pub fn hops(&self) -> usize {
        self.snr.len()
    }

    /// `M_0..M_K`.
    pub fn antennas(&self) -> &[usize] {
        &self.antennas
    }

    /// Linear per-hop SNRs `rho_1..rho_K` (index 0 holds `rho_1`).
    pub fn snr(&self) -> &[f64] {
        &self.snr
    }

    /// `beta_0..beta_{K-1}`.
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn beta_mode(&self) -> BetaMode {
        if self.beta_auto {
            BetaMode::Auto
        } else {
            BetaMode::Explicit(self.beta.clone())
        }
    }

    pub fn channel_norm(&self) -> ChannelNorm {
        self.channel_norm
    }

    /// `rho_k` for a 1-based hop index.
    pub fn rho(&self, k: usize) -> f64 {
        self.snr[k - 1]
    }

    /// Effective gain of the first hop, `beta_0 rho_1`.
    pub fn gain(&self) -> f64 {
        self.beta[0] * self.snr[0]
    }

    /// `beta_{k} rho_{k+1}`: the gain coupling hop `k` to hop `k+1` (0-based `k`).
    pub fn hop_gain(&self, k: usize) -> f64 {
        self.beta[k] * self.snr[k]
    }

    /// `alpha_{i,j} = M_j / M_i`.
    pub fn antenna_ratio(&self, i: usize, j: usize) -> Result<f64> {
        let terminals = self.antennas.len();
        for index in [i, j] {
            if index >= terminals {
                return Err(Error::IndexOutOfRange { index, terminals });
            }
        }
        Ok(self.ratio(i, j))
    }

    pub(crate) fn ratio(&self, i: usize, j: usize) -> f64 {
        self.antennas[j] as f64 / self.antennas[i] as f64
    }

    /// Variance of each entry of `H_k` (1-based hop index).
    pub fn entry_variance(&self, k: usize) -> f64 {
        let m = match self.channel_norm {
            ChannelNorm::TransmitSide => self.antennas[k - 1],
            ChannelNorm::ReceiveSide => self.antennas[k],
        };
        self.snr[k - 1] * self.beta[k - 1] / m as f64
    }

    /// Same network with new SNRs; auto beta is recomputed.
    pub fn with_snr(&self, snr: &[f64]) -> Result<Self> {
        build_network(
            self.hops(),
            &self.antennas,
            snr,
            self.beta_mode(),
            self.channel_norm,
        )
    }

    pub fn with_antennas(&self, antennas: &[usize]) -> Result<Self> {
        build_network(
            self.hops(),
            antennas,
            &self.snr,
            self.beta_mode(),
            self.channel_norm,
        )
    }

    pub fn with_channel_norm(&self, channel_norm: ChannelNorm) -> Self {
        Self {
            channel_norm,
            ..self.clone()
        }
    }
}

/// Pathloss `gamma_k = d_k^(-alpha)` folded into the per-hop SNRs.
#[derive(Debug, Clone, PartialEq)]
pub struct PathlossModel {
    pub distances: Vec<f64>,
    pub exponent: f64,
    pub base_snr: f64,
}

impl PathlossModel {
    /// Equidistant terminals: each of the `hops` links spans `total / hops`.
    pub fn equidistant(total: f64, hops: usize, exponent: f64, base_snr: f64) -> Self {
        Self {
            distances: vec![total / hops as f64; hops],
            exponent,
            base_snr,
        }
    }

    pub fn snr(&self) -> Result<Vec<f64>> {
        if !(self.base_snr > 0.0) || !(self.exponent >= 0.0) {
            return Err(Error::invalid(
                "pathloss needs positive base snr and nonnegative exponent",
            ));
        }
        self.distances
            .iter()
            .map(|&d| {
                if d > 0.0 && d.is_finite() {
                    Ok(self.base_snr * d.powf(-self.exponent))
                } else {
                    Err(Error::invalid(format!(
                        "distance must be positive, got {d}"
                    )))
                }
            })
            .collect()
    }
}

pub fn apply_pathloss(cfg: &NetworkConfig, model: &PathlossModel) -> Result<NetworkConfig> {
    if model.distances.len() != cfg.hops() {
        return Err(Error::DimensionMismatch(format!(
            "pathloss needs {} distances, got {}",
            cfg.hops(),
            model.distances.len()
        )));
    }
    cfg.with_snr(&model.snr()?)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn auto_beta_three_hops_twenty_db() {
        let cfg =
            build_network(3, &[8; 4], &[100.0; 3], BetaMode::Auto, Default::default()).unwrap();
        assert_eq!(cfg.beta()[0], 1.0);
        assert_eq!(cfg.beta()[1], 1.0 / 101.0);
        assert_eq!(cfg.beta()[2], 1.0 / 101.0);
    }

    #[test]
    fn auto_beta_single_hop_source_unit_power() {
        let cfg = build_network(1, &[2, 2], &[1.0], BetaMode::Auto, Default::default()).unwrap();
        assert_eq!(cfg.beta(), &[1.0]);
        assert_eq!(cfg.gain(), 1.0);
    }

    #[test]
    fn relay_beta_matches_power_normalization() {
        let snr = [3.0, 7.5, 0.2, 40.0];
        let cfg = build_network(4, &[4; 5], &snr, BetaMode::Auto, Default::default()).unwrap();
        for k in 1..4 {
            assert_eq!(cfg.beta()[k] * (1.0 + snr[k - 1]), 1.0);
        }
    }

    #[test]
    fn antenna_length_mismatch() {
        let err =
            build_network(2, &[4, 4], &[1.0, 1.0], BetaMode::Auto, Default::default()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn rejects_nonpositive_entries() {
        let norm = ChannelNorm::default();
        assert!(build_network(1, &[0, 2], &[1.0], BetaMode::Auto, norm).is_err());
        assert!(build_network(1, &[2, 2], &[0.0], BetaMode::Auto, norm).is_err());
        assert!(build_network(1, &[2, 2], &[1.0], BetaMode::Explicit(vec![-1.0]), norm).is_err());
        assert!(build_network(0, &[2], &[], BetaMode::Auto, norm).is_err());
    }

    #[test]
    fn ratios() {
        let norm = ChannelNorm::default();
        let cfg = build_network(3, &[4, 6, 8, 12], &[1.0; 3], BetaMode::Auto, norm).unwrap();
        assert_eq!(cfg.antenna_ratio(0, 3).unwrap(), 3.0);
        assert!(matches!(
            cfg.antenna_ratio(0, 4),
            Err(Error::IndexOutOfRange { index: 4, .. })
        ));
        let eq = build_network(3, &[8; 4], &[1.0; 3], BetaMode::Auto, norm).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(eq.antenna_ratio(i, j).unwrap(), 1.0);
            }
        }
        let fig7 = build_network(2, &[24, 28, 36], &[1.0; 2], BetaMode::Auto, norm).unwrap();
        assert_eq!(fig7.antenna_ratio(0, 2).unwrap(), 1.5);
    }

    #[test]
    fn rebuilding_is_idempotent() {
        let cfg = build_network(
            2,
            &[3, 5, 7],
            &[2.0, 9.0],
            BetaMode::Auto,
            ChannelNorm::ReceiveSide,
        )
        .unwrap();
        let again = build_network(
            cfg.hops(),
            cfg.antennas(),
            cfg.snr(),
            cfg.beta_mode(),
            cfg.channel_norm(),
        )
        .unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn pathloss() {
        let norm = ChannelNorm::default();
        let cfg = build_network(3, &[8; 4], &[1.0; 3], BetaMode::Auto, norm).unwrap();
        let unit = PathlossModel {
            distances: vec![1.0; 3],
            exponent: 4.0,
            base_snr: 10.0,
        };
        assert_eq!(apply_pathloss(&cfg, &unit).unwrap().snr(), &[10.0; 3]);

        let one = build_network(1, &[2, 2], &[1.0], BetaMode::Auto, norm).unwrap();
        let far = PathlossModel {
            distances: vec![2.0],
            exponent: 4.0,
            base_snr: 10.0,
        };
        assert_relative_eq!(apply_pathloss(&one, &far).unwrap().snr()[0], 0.625);

        let eq = PathlossModel::equidistant(6.0, 3, 4.0, 10.0);
        assert_eq!(eq.distances, vec![2.0; 3]);

        let flat = PathlossModel {
            distances: vec![0.3, 2.0, 7.0],
            exponent: 0.0,
            base_snr: 5.0,
        };
        assert_eq!(apply_pathloss(&cfg, &flat).unwrap().snr(), &[5.0; 3]);

        let bad = PathlossModel {
            distances: vec![1.0, 0.0, 1.0],
            exponent: 4.0,
            base_snr: 10.0,
        };
        assert!(apply_pathloss(&cfg, &bad).is_err());
    }

    #[test]
    fn pathloss_recomputes_auto_beta() {
        let norm = ChannelNorm::default();
        let cfg = build_network(2, &[4; 3], &[1.0; 2], BetaMode::Auto, norm).unwrap();
        let m = PathlossModel::equidistant(2.0, 2, 2.0, 10.0);
        let out = apply_pathloss(&cfg, &m).unwrap();
        assert_eq!(out.beta()[1], 1.0 / (1.0 + out.snr()[0]));
    }

    #[test]
    fn entry_variance_follows_norm() {
        let cfg = build_network(
            2,
            &[2, 4, 8],
            &[3.0, 5.0],
            BetaMode::Explicit(vec![0.5, 0.25]),
            ChannelNorm::TransmitSide,
        )
        .unwrap();
        assert_eq!(cfg.entry_variance(1), 3.0 * 0.5 / 2.0);
        assert_eq!(cfg.entry_variance(2), 5.0 * 0.25 / 4.0);
        let rx = cfg.with_channel_norm(ChannelNorm::ReceiveSide);
        assert_eq!(rx.entry_variance(2), 5.0 * 0.25 / 8.0);
    }
}
