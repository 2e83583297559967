//! Device parameters of a current-biased superconducting nanowire detector
//! and the closed-form pieces of its response: the L/R bias-current recovery
//! after a hotspot, the discriminator threshold expressed as a bias fraction,
//! and the coherent-state click probability.
//!
//! All quantities are SI: amperes, henries, ohms, volts, seconds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LOAD_RESISTANCE: f64 = 25.0;
pub const DEFAULT_SHUNT_RESISTANCE: f64 = 50.0;
pub const DEFAULT_AMPLIFIER_GAIN: f64 = 100.0;
pub const DEFAULT_DISCRIMINATOR_THRESHOLD: f64 = 20e-3;
/// Operating bias as a fraction of the critical current when none is given.
pub const DEFAULT_OPERATING_RATIO: f64 = 0.906;

/// Where the default two-point efficiency curve is pinned below the
/// operating point: `efficiency` (absolute) at `bias_ratio`·I_0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveAnchor {
    pub bias_ratio: f64,
    pub efficiency: f64,
}

/// Unvalidated detector description, as stored in a detector JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub name: String,
    pub critical_current: f64,
    pub kinetic_inductance: f64,
    #[serde(default = "default_load")]
    pub load_resistance: f64,
    #[serde(default = "default_shunt")]
    pub shunt_resistance: f64,
    #[serde(default = "default_gain")]
    pub amplifier_gain: f64,
    #[serde(default = "default_threshold")]
    pub discriminator_threshold: f64,
    /// I_0; defaults to [`DEFAULT_OPERATING_RATIO`]·I_c.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operating_bias: Option<f64>,
    pub base_efficiency: f64,
    pub dark_count_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_file: Option<std::path::PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_anchor: Option<CurveAnchor>,
    /// Free-form provenance of the values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn default_load() -> f64 {
    DEFAULT_LOAD_RESISTANCE
}
fn default_shunt() -> f64 {
    DEFAULT_SHUNT_RESISTANCE
}
fn default_gain() -> f64 {
    DEFAULT_AMPLIFIER_GAIN
}
fn default_threshold() -> f64 {
    DEFAULT_DISCRIMINATOR_THRESHOLD
}

/// Validated detector parameters. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorParams {
    name: String,
    critical_current: f64,
    kinetic_inductance: f64,
    load_resistance: f64,
    shunt_resistance: f64,
    amplifier_gain: f64,
    discriminator_threshold: f64,
    operating_bias: f64,
    base_efficiency: f64,
    dark_count_rate: f64,
}

fn finite(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(field, v, "must be finite"))
    }
}

impl DetectorParams {
    pub fn new(config: &DetectorConfig) -> Result<Self> {
        let ic = finite("critical_current", config.critical_current)?;
        let lk = finite("kinetic_inductance", config.kinetic_inductance)?;
        let rl = finite("load_resistance", config.load_resistance)?;
        let rs = finite("shunt_resistance", config.shunt_resistance)?;
        let gain = finite("amplifier_gain", config.amplifier_gain)?;
        let vth = finite("discriminator_threshold", config.discriminator_threshold)?;
        let i0 = finite(
            "operating_bias",
            config.operating_bias.unwrap_or(DEFAULT_OPERATING_RATIO * ic),
        )?;
        let eta0 = finite("base_efficiency", config.base_efficiency)?;
        let dark = finite("dark_count_rate", config.dark_count_rate)?;

        if ic <= 0.0 {
            return Err(Error::config("critical_current", ic, "must be > 0"));
        }
        if !(i0 > 0.0 && i0 < ic) {
            return Err(Error::config(
                "operating_bias",
                i0,
                format!("must satisfy 0 < I_0 < I_c = {ic}"),
            ));
        }
        if lk <= 0.0 {
            return Err(Error::config("kinetic_inductance", lk, "must be > 0"));
        }
        if rl <= 0.0 {
            return Err(Error::config("load_resistance", rl, "must be > 0"));
        }
        if rs <= 0.0 {
            return Err(Error::config("shunt_resistance", rs, "must be > 0"));
        }
        if gain <= 0.0 {
            return Err(Error::config("amplifier_gain", gain, "must be > 0"));
        }
        if !(0.0..=1.0).contains(&eta0) {
            return Err(Error::config("base_efficiency", eta0, "must lie in [0, 1]"));
        }
        if dark < 0.0 {
            return Err(Error::config("dark_count_rate", dark, "must be >= 0"));
        }
        let full_pulse = gain * i0 * rl;
        if !(vth >= 0.0 && vth < full_pulse) {
            return Err(Error::config(
                "discriminator_threshold",
                vth,
                format!("must satisfy 0 <= V_th < Gain*I_0*R_L = {full_pulse} V"),
            ));
        }

        Ok(Self {
            name: config.name.clone(),
            critical_current: ic,
            kinetic_inductance: lk,
            load_resistance: rl,
            shunt_resistance: rs,
            amplifier_gain: gain,
            discriminator_threshold: vth,
            operating_bias: i0,
            base_efficiency: eta0,
            dark_count_rate: dark,
        })
    }

    /// The fully resolved configuration (defaults filled in).
    pub fn to_config(&self) -> DetectorConfig {
        DetectorConfig {
            name: self.name.clone(),
            critical_current: self.critical_current,
            kinetic_inductance: self.kinetic_inductance,
            load_resistance: self.load_resistance,
            shunt_resistance: self.shunt_resistance,
            amplifier_gain: self.amplifier_gain,
            discriminator_threshold: self.discriminator_threshold,
            operating_bias: Some(self.operating_bias),
            base_efficiency: self.base_efficiency,
            dark_count_rate: self.dark_count_rate,
            curve_file: None,
            curve_anchor: None,
            note: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn critical_current(&self) -> f64 {
        self.critical_current
    }
    pub fn kinetic_inductance(&self) -> f64 {
        self.kinetic_inductance
    }
    pub fn load_resistance(&self) -> f64 {
        self.load_resistance
    }
    pub fn shunt_resistance(&self) -> f64 {
        self.shunt_resistance
    }
    pub fn amplifier_gain(&self) -> f64 {
        self.amplifier_gain
    }
    pub fn discriminator_threshold(&self) -> f64 {
        self.discriminator_threshold
    }
    pub fn operating_bias(&self) -> f64 {
        self.operating_bias
    }
    pub fn base_efficiency(&self) -> f64 {
        self.base_efficiency
    }
    pub fn dark_count_rate(&self) -> f64 {
        self.dark_count_rate
    }

    /// I_0 / I_c.
    pub fn operating_fraction(&self) -> f64 {
        self.operating_bias / self.critical_current
    }

    /// τ = L_k / R_L.
    pub fn recovery_time_constant(&self) -> f64 {
        self.kinetic_inductance / self.load_resistance
    }

    /// β = R_L / L_k, the reciprocal of [`Self::recovery_time_constant`].
    pub fn recovery_rate(&self) -> f64 {
        self.load_resistance / self.kinetic_inductance
    }

    /// Bias current a time `t` after the wire was driven normal:
    /// I_0·(1 − e^{−βt}).
    pub fn bias_current(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::domain("elapsed time", t, ">= 0 s"));
        }
        Ok(self.operating_bias * -(-self.recovery_rate() * t).exp_m1())
    }

    /// Time after a reset at which the bias current reaches `fraction`·I_0.
    pub fn time_to_bias_fraction(&self, fraction: f64) -> Result<f64> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::domain("bias fraction", fraction, "strictly between 0 and 1"));
        }
        Ok(-self.recovery_time_constant() * (-fraction).ln_1p())
    }

    /// Smallest I_b / I_0 whose output pulse Gain·I_b·R_L still reaches V_th.
    pub fn threshold_bias_fraction(&self) -> f64 {
        self.discriminator_threshold / (self.amplifier_gain * self.load_resistance * self.operating_bias)
    }

    /// Time for the bias to climb back to the discriminator threshold; zero
    /// when every transition registers (V_th = 0).
    pub fn threshold_recovery_time(&self) -> f64 {
        let phi = self.threshold_bias_fraction();
        if phi <= 0.0 {
            0.0
        } else {
            -self.recovery_time_constant() * (-phi).ln_1p()
        }
    }

    /// Pulse height at the discriminator for a transition at full bias.
    pub fn full_pulse_height(&self) -> f64 {
        self.amplifier_gain * self.operating_bias * self.load_resistance
    }
}

/// Probability that a coherent pulse with mean photon number `mean_photons`
/// drives the wire normal, given efficiency `eta` and a per-slot dark-count
/// exponent `dark`: 1 − exp(−dark − |α|²·η).
pub fn click_probability(mean_photons: f64, eta: f64, dark: f64) -> Result<f64> {
    if !(mean_photons >= 0.0) {
        return Err(Error::domain("mean photon number", mean_photons, ">= 0"));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::domain("efficiency", eta, "in [0, 1]"));
    }
    if !(dark >= 0.0) {
        return Err(Error::domain("dark-count exponent", dark, ">= 0"));
    }
    Ok(-(-dark - mean_photons * eta).exp_m1())
}
