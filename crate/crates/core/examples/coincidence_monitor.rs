//! How much a two-port coincidence monitor sees during port forcing,
//! compared with a normal-operation baseline.
//!
//! Run: cargo run --example coincidence_monitor -- [baseline-per-slot]

use sspd_core::attack::{
    blinding_schedule, coincidence_countermeasure, forcing_photons_for, BASELINE_COINCIDENCE_PER_SLOT,
};
use sspd_core::Detector;

fn main() -> sspd_core::Result<()> {
    let baseline = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(BASELINE_COINCIDENCE_PER_SLOT);
    let blinded = Detector::preset("ch5")?;
    let forced = Detector::preset("ch2")?;
    let plan = blinding_schedule(&blinded, 1e-5)?.with_forcing(forcing_photons_for(0.894, 0.117)?);
    let r = coincidence_countermeasure(&blinded, &forced, &plan, baseline)?;

    println!("                      exact-age     paper-approx");
    println!(
        "per forcing event     {:.4} %      {:.4} %",
        100.0 * r.per_event_exact,
        100.0 * r.per_event_paper_approx
    );
    println!(
        "per slot (/{:2})       {:.3e} %   {:.3e} %",
        r.blinding_interval_slots,
        100.0 * r.normalized_exact,
        100.0 * r.normalized_paper_approx
    );
    println!(
        "vs baseline {:.3e}   {:>9.0}x     {:>9.0}x",
        baseline, r.ratio_exact, r.ratio_paper_approx
    );
    Ok(())
}
