//! Physical constants (CODATA 2018) and unit helpers.
//!
//! Angular frequencies are carried in rad/s throughout the library; the
//! `hz` helpers convert at the edges.

use std::f64::consts::TAU;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// q²/(4πε₀) in J·m.
pub const COULOMB_CONSTANT_E2: f64 =
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY);

/// Mass of a ¹⁷¹Yb⁺ ion in kg.
pub const YB171_MASS: f64 = 171.0 * ATOMIC_MASS_UNIT;

/// Raman wavelength for ¹⁷¹Yb⁺ in m.
pub const YB171_RAMAN_WAVELENGTH: f64 = 355e-9;

/// Counter-propagating Raman beams: δk = 2·(2π/λ).
pub fn counter_propagating_delta_k(wavelength: f64) -> f64 {
    2.0 * TAU / wavelength
}

#[inline]
pub fn hz_to_rad(f: f64) -> f64 {
    f * TAU
}

#[inline]
pub fn rad_to_hz(w: f64) -> f64 {
    w / TAU
}
