//! Optical power and photon-number conversions.

use crate::error::{Error, Result};

/// Planck constant, J·s (exact, SI 2019).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Telecom C-band wavelength used throughout unless overridden.
pub const DEFAULT_WAVELENGTH: f64 = 1550e-9;

/// Energy of one photon at `wavelength` meters, in joules.
pub fn photon_energy(wavelength: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / wavelength
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}

/// Mean photon number per pulse of a pulse train with average optical
/// `power` (W) at repetition rate `rep_rate` (Hz).
///
/// Zero power gives zero photons; negative power, or non-positive rate or
/// wavelength, is a domain error.
pub fn photons_from_power(power: f64, rep_rate: f64, wavelength: f64) -> Result<f64> {
    if !(power >= 0.0) || !power.is_finite() {
        return Err(Error::domain("power", power, "finite and >= 0 W"));
    }
    if !(rep_rate > 0.0) || !rep_rate.is_finite() {
        return Err(Error::domain("rep_rate", rep_rate, "finite and > 0 Hz"));
    }
    if !(wavelength > 0.0) || !wavelength.is_finite() {
        return Err(Error::domain("wavelength", wavelength, "finite and > 0 m"));
    }
    Ok(power / rep_rate / photon_energy(wavelength))
}

/// Inverse of [`photons_from_power`].
pub fn power_from_photons(photons: f64, rep_rate: f64, wavelength: f64) -> f64 {
    photons * rep_rate * photon_energy(wavelength)
}
