//! Steering which DPS port clicks: blind CH5 and hit CH2 with a 1-ns double
//! pulse whose intensity gives an 89.4 % first-pulse click.
//!
//! Run: cargo run --example port_control

use sspd_core::attack::{blinding_schedule, double_pulse_port_control, forcing_photons_for};
use sspd_core::Detector;

fn main() -> sspd_core::Result<()> {
    let blinded = Detector::preset("ch5")?;
    let forced = Detector::preset("ch2")?;

    let photons = forcing_photons_for(0.894, forced.params.base_efficiency())?;
    let plan = blinding_schedule(&blinded, 1e-5)?.with_forcing(photons);
    let r = double_pulse_port_control(&blinded, &forced, &plan)?;

    println!(
        "forcing intensity      {:.2} photons/pulse",
        r.forcing_photons_per_pulse
    );
    println!("CH2 first pulse        {:.4}", r.p1);
    println!("CH2 either pulse       {:.4}", r.cumulative);
    println!("CH5 survives pulse 1   {:.4}", r.blinded_no_transition_first);
    println!("CH5 clicks on pulse 2  {:.4e}", r.blinded_click_second);
    println!("CH5 blinding escape    {:.2e} per pulse", r.blinding_escape);
    Ok(())
}
