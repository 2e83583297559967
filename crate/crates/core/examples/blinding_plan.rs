//! Tailored blinding trains for every bundled detector, the continuous-wave
//! power that blinds each one at 1 GHz, and the DPS double-pulse budget.
//!
//! Run: cargo run --release --example blinding_plan

use sspd_core::attack::{blinding_schedule, dps_double_pulse_power, min_blinding_power, BlindingSearch};
use sspd_core::device::preset_names;
use sspd_core::units::DEFAULT_WAVELENGTH;
use sspd_core::Detector;

fn main() -> sspd_core::Result<()> {
    println!("det   period(ns)  photons  retrip        DPS x4 (nW)  blinded below 300 c/s at");
    for name in preset_names() {
        let d = Detector::preset(name)?;
        let plan = blinding_schedule(&d, 1e-5)?;
        let dps = dps_double_pulse_power(&plan, 2, DEFAULT_WAVELENGTH);
        let cw = min_blinding_power(&d, 1e9, 300.0, &BlindingSearch::default())?;
        println!(
            "{:4}  {:9.2}  {:7}  {:.8}  {:10.1}   {:.1} dBm ({:.0} photons/pulse)",
            plan.target,
            plan.blinding_period * 1e9,
            plan.photons_per_blinding_pulse,
            plan.retrip_probability,
            dps * 1e9,
            cw.dbm,
            cw.photons_per_pulse
        );
    }
    Ok(())
}
