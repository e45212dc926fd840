//! Network, prior and detector configuration.

mod constellation;
mod detector;
mod network;

pub use constellation::{Constellation, DiscretePrior, Shape};
pub use detector::{DetectorKind, DetectorSpec, NoiseLevel};
pub use network::{
    apply_pathloss, build_network, db_to_linear, linear_to_db, BetaMode, ChannelNorm,
    NetworkConfig, PathlossModel,
};
