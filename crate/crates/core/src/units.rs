//! Physical constants and unit conversions.
//!
//! The library works in SI base units (Hz, s, m, F, H, ohm). Angular
//! frequencies only appear inside formula evaluation.

use std::f64::consts::PI;

/// Speed of light in vacuum (m/s).
pub const C_LIGHT: f64 = 299_792_458.0;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;

pub const TWO_PI: f64 = 2.0 * PI;

#[inline]
pub fn angular(f_hz: f64) -> f64 {
    TWO_PI * f_hz
}

#[inline]
pub fn um(x: f64) -> f64 {
    x * 1e-6
}

#[inline]
pub fn mhz(x: f64) -> f64 {
    x * 1e6
}

#[inline]
pub fn to_um(x_m: f64) -> f64 {
    x_m * 1e6
}

#[inline]
pub fn to_mhz(x_hz: f64) -> f64 {
    x_hz * 1e-6
}
