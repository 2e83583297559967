//! Bias recovery after a hotspot: time constant, threshold recovery time, and
//! the efficiency the wire sees as it recovers.
//!
//! Run: cargo run --example recovery -- [preset-or-file]

use sspd_core::io::resolve_detector;

fn main() -> sspd_core::Result<()> {
    let spec = std::env::args().nth(1).unwrap_or_else(|| "ch5".into());
    let d = resolve_detector(&spec, None)?;
    let p = &d.params;

    println!("{}: tau = {:.1} ns", p.name(), p.recovery_time_constant() * 1e9);
    println!("time to 72 % of I_0: {:.1} ns", p.time_to_bias_fraction(0.72)? * 1e9);
    println!(
        "threshold at {:.4} of I_0, reached after {:.2} ns",
        p.threshold_bias_fraction(),
        p.threshold_recovery_time() * 1e9
    );
    println!("\n t (ns)   I_b/I_0   efficiency");
    for t_ns in [1.0, 5.0, 10.0, 20.0, 40.0, 57.0, 80.0, 120.0, 200.0] {
        let t = t_ns * 1e-9;
        let frac = p.bias_current(t)? / p.operating_bias();
        println!("{t_ns:7.1}   {frac:.4}    {:.3e}", d.efficiency_after(t)?);
    }
    Ok(())
}
