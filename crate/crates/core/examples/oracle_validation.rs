//! Cross-checks the renewal recursion against the exact age-distribution
//! chain and a seeded Monte Carlo.
//!
//! Run: cargo run --release --example oracle_validation -- [trials] [seed]

use sspd_core::oracle::{compare_exact, compare_mc, default_age_cap, markov_exact, simulate};
use sspd_core::pulse_train::DarkCounts;
use sspd_core::{evolve, Detector, GateMode, PulseTrain};

fn main() -> sspd_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);

    let d = Detector::preset("ch5")?;
    for photons in [2.0, 8.0, 300.0] {
        let train = PulseTrain::new(photons, 1e-9, 100)?;
        let cap = default_age_cap(&d, 1e-9);
        let trace = evolve(&d, &train, GateMode::ExactAge)?;
        let exact = markov_exact(&d, &train, GateMode::ExactAge, DarkCounts::Constant, cap)?;
        let mc = simulate(&d, &train, GateMode::ExactAge, DarkCounts::Constant, trials, seed)?;

        let a = compare_exact(&trace, &exact)?;
        let b = compare_mc(&exact.s_on, &mc)?;
        println!(
            "{photons:6} photons: recursion-exact {:.1e}   mc within 3 sigma {:5.1} %   max |z| {:.2}",
            a.max_abs_deviation,
            100.0 * b.within_three_sigma,
            b.max_abs_z
        );
    }
    Ok(())
}
