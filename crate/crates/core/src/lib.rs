//! Simulation kernel for frequency-multiplexed entangled (FME) single photons
//! generated from a two-species atomic ensemble.
//!
//! The protocol has four stages, each with its own module:
//!
//! 1. optical pumping into the collective ground state ([`hilbert::TruncatedState::vacuum`]),
//! 2. off-resonant write pulses producing correlated Stokes photons and spin
//!    waves ([`write_dynamics`]),
//! 3. a threshold-detector click projecting the two species onto an entangled
//!    single-excitation state ([`herald`]),
//! 4. read pulses mapping the spin wave onto a two-frequency single photon
//!    through dark-state polaritons ([`retrieval`]).
//!
//! [`protocol`] cycles these stages until a herald fires and aggregates the
//! Monte Carlo statistics.

pub mod error;
pub mod herald;
pub mod hilbert;
pub mod linalg;
pub mod protocol;
pub mod retrieval;
pub mod rng;
pub mod write_dynamics;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Convert a frequency in Hz to an angular frequency in rad/s.
#[inline]
pub fn hz_to_rad(hz: f64) -> f64 {
    2.0 * std::f64::consts::PI * hz
}

/// Convert an angular frequency in rad/s back to Hz.
#[inline]
pub fn rad_to_hz(rad: f64) -> f64 {
    rad / (2.0 * std::f64::consts::PI)
}
