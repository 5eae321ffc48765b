//! Uplink beamforming through user-side reconfigurable intelligent surfaces.
//!
//! The crate synthesizes near- and far-field line-of-sight channels for a
//! stack of transmissive surface layers, maximizes the detection SNR by
//! alternating closed-form updates of the transmit beamformer, the per-layer
//! phase shifts and the receive combiner, and evaluates the resulting power
//! distribution, element activation ratio, radiation pattern and multi-user
//! SINR. The [`lemma`] module checks the amplitude range reachable at a
//! second-layer element numerically.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamformer;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lemma;
pub mod metrics;
pub mod quadrature;
pub mod scenario;

pub use error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `10·log10(x)`.
pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Inverse of [`db`].
pub fn from_db(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}
