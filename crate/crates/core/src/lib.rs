//! Placement optimization and performance evaluation for uplink systems whose
//! base station carries movable subarrays spread over an extremely large region.
//!
//! The crate is organized bottom-up:
//!
//! - [`scenario`]: candidate placement grid, user grid, activation
//!   probabilities and obstacle-induced line-of-sight visibility.
//! - [`channel`]: wave vectors, subarray steering vectors, large-scale gains
//!   and random channel draws for arbitrary array layouts.
//! - [`rate`]: the closed-form approximation of the expected weighted sum rate
//!   under maximum ratio combining.
//! - [`lp`] and [`optimizer`]: LP-initialized successive replacement and an
//!   exhaustive-search oracle.
//! - [`benchmarks`]: fixed-position reference layouts and hotspot user layouts.
//! - [`montecarlo`]: simulated MRC/MMSE rates, power and correlation maps.
//! - [`sweep`], [`validate`], [`config`], [`presets`]: the pieces the command
//!   line front end is assembled from.

// `!(x > 0.0)` also rejects NaN; index loops read better in the dense kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod benchmarks;
pub mod channel;
pub mod config;
pub mod error;
pub mod geom;
pub mod lp;
pub mod montecarlo;
pub mod optimizer;
pub mod presets;
pub mod rate;
pub mod rng;
pub mod scenario;
pub mod sweep;
pub mod validate;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a dB value to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
