//! Large-system predictions and Monte Carlo validation for multi-hop
//! amplify-and-forward MIMO relay channels.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod mc;
pub mod model;
pub mod quadrature;
pub mod replica;
pub mod scalar;
pub mod scenario;
pub mod validation;

pub use error::{Error, Result};
pub use model::*;
