//! Exact SI constants (2019 redefinition). Energies are carried as E/h in Hz
//! throughout the crate.

use std::f64::consts::PI;

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Superconducting flux quantum h/2e.
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);
/// Reduced flux quantum Φ0/2π.
pub const REDUCED_FLUX_QUANTUM: f64 = FLUX_QUANTUM / (2.0 * PI);

pub const GHZ: f64 = 1e9;

/// e²/(2C) expressed as a frequency E/h.
pub fn charging_energy_hz(capacitance: f64) -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * capacitance) / PLANCK
}

/// (Φ0/2π)²/L expressed as a frequency E/h.
pub fn inductive_energy_hz(inductance: f64) -> f64 {
    REDUCED_FLUX_QUANTUM * REDUCED_FLUX_QUANTUM / inductance / PLANCK
}
