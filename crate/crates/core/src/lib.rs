//! Gaussian term-structure toolkit.
//!
//! Zero-coupon pricing under Vasicek, G2++, Ho-Lee and Hull-White; exact
//! maximum-likelihood estimation from bond-price panels; cross-sectional
//! least-squares calibration; Monte-Carlo oracles; static-arbitrage checks.

pub mod calibration;
pub mod cli;
pub mod curve;
pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod io;
pub mod models;
pub mod montecarlo;
pub mod optimize;

pub use error::{Error, Result};
