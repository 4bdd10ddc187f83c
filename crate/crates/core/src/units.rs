//! Unit conversions.
//!
//! Internally every time is in ms and every angular frequency in rad/ms.
//! Published values are quoted as `2π × kHz`; since 1 kHz = 1 ms⁻¹ the
//! conversion is a single factor of 2π.

use std::f64::consts::PI;

/// `2π × khz` kHz as an angular frequency in rad/ms.
#[inline]
pub fn two_pi_khz(khz: f64) -> f64 {
    2.0 * PI * khz
}

/// `2π × mhz` MHz in rad/ms.
#[inline]
pub fn two_pi_mhz(mhz: f64) -> f64 {
    two_pi_khz(mhz * 1e3)
}

/// `2π × ghz` GHz in rad/ms.
#[inline]
pub fn two_pi_ghz(ghz: f64) -> f64 {
    two_pi_khz(ghz * 1e6)
}

/// Angular frequency in rad/ms expressed as `2π × kHz`.
#[inline]
pub fn to_two_pi_khz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

/// Microseconds to ms.
#[inline]
pub fn micros(us: f64) -> f64 {
    us * 1e-3
}
