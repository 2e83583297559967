//! Replacing the two-point efficiency model with a tabulated curve, and how
//! the blinding estimate moves with it.
//!
//! Run: cargo run --release --example custom_curve -- [curve.csv]

use std::path::PathBuf;

use sspd_core::attack::{blinding_schedule, min_blinding_power, BlindingSearch};
use sspd_core::io::resolve_detector;

fn main() -> sspd_core::Result<()> {
    let csv = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/ch5_curve.csv")));

    for (label, curve) in [("two-point", None), ("tabulated", Some(csv.as_path()))] {
        let d = resolve_detector("ch5", curve)?;
        let plan = blinding_schedule(&d, 1e-5)?;
        let cw = min_blinding_power(&d, 1e9, 300.0, &BlindingSearch::default())?;
        println!(
            "{label:10} eta(threshold) {:.3e}   blinding pulse {:6} photons   blinded from {:.1} dBm",
            d.efficiency_at_threshold()?,
            plan.photons_per_blinding_pulse,
            cw.dbm
        );
    }
    Ok(())
}
