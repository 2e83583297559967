//! Steady-state count rate against average input power at 1 GHz, behind a
//! discriminator that saturates at 68 Mc/s.
//!
//! Run: cargo run --release --example power_sweep

use sspd_core::pulse_train::{power_sweep, SweepConfig};
use sspd_core::{Detector, GateMode};

fn main() -> sspd_core::Result<()> {
    let powers: Vec<f64> = (0..=20).map(|i| -90.0 + 4.0 * i as f64).collect();
    println!("power (dBm)  CH5 exact-age   CH5 paper-approx  CH2 exact-age   [c/s]");

    let mut cols = Vec::new();
    for (name, mode) in [
        ("ch5", GateMode::ExactAge),
        ("ch5", GateMode::PaperApprox),
        ("ch2", GateMode::ExactAge),
    ] {
        let mut cfg = SweepConfig::new(1e9, powers.clone());
        cfg.steady.mode = mode;
        cols.push(power_sweep(&Detector::preset(name)?, &cfg)?);
    }
    for (i, dbm) in powers.iter().enumerate() {
        println!(
            "{dbm:8.1}     {:12.4e}    {:12.4e}      {:12.4e}",
            cols[0][i].observed_rate_hz, cols[1][i].observed_rate_hz, cols[2][i].observed_rate_hz
        );
    }
    Ok(())
}
