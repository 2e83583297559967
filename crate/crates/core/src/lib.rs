//! Pulse-train response of superconducting nanowire single-photon detectors
//! under bright illumination, and the blinding / port-control / coincidence
//! arithmetic built on it.
//!
//! The runnable programs under `examples/` walk through each capability:
//!
//! ```bash
//! cargo run --release --example recovery
//! cargo run --release --example power_sweep
//! ```

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod cli;
pub mod curve;
pub mod detector;
pub mod device;
pub mod error;
pub mod io;
pub mod oracle;
pub mod pulse_train;
pub mod units;

pub use curve::EfficiencyCurve;
pub use detector::{click_probability, DetectorConfig, DetectorParams};
pub use device::Detector;
pub use error::{Error, Result};
pub use pulse_train::{evolve, GateMode, PulseTrain, TraceResult};
