//! Per-slot renewal probabilities for a bright 1 GHz pulse train, under both
//! registration gates.
//!
//! Run: cargo run --example pulse_train_trace -- [photons-per-pulse]

use sspd_core::{evolve, Detector, GateMode, PulseTrain};

fn main() -> sspd_core::Result<()> {
    let photons: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(300.0);
    let d = Detector::preset("ch5")?;
    let train = PulseTrain::new(photons, 1e-9, 200)?;

    let exact = evolve(&d, &train, GateMode::ExactAge)?;
    let approx = evolve(&d, &train, GateMode::PaperApprox)?;

    println!("CH5, {photons} photons/pulse, T = 1 ns");
    println!("slot      s_on        p_on(exact-age)  p_on(paper-approx)");
    for n in [1, 2, 3, 10, 20, 40, 58, 59, 60, 80, 120, 160, 200] {
        let i = n - 1;
        println!(
            "{n:4}  {:.6e}  {:.6e}     {:.6e}",
            exact.s_on[i], exact.p_on[i], approx.p_on[i]
        );
    }
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    println!(
        "\nexpected clicks in 200 ns: exact-age {:.4}, paper-approx {:.4}",
        sum(&exact.p_on),
        sum(&approx.p_on)
    );
    Ok(())
}
