#![allow(dead_code)]

use sspd_core::{Detector, DetectorConfig, DetectorParams, EfficiencyCurve, GateMode, PulseTrain};

/// A detector, pulse train and gate built from eleven numbers in [0, 1).
pub struct Case {
    pub detector: Detector,
    pub train: PulseTrain,
    pub mode: GateMode,
}

fn lerp(u: f64, lo: f64, hi: f64) -> f64 {
    lo + u * (hi - lo)
}

fn log_lerp(u: f64, lo: f64, hi: f64) -> f64 {
    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
}

pub fn detector_from(u: &[f64]) -> Detector {
    let ic = lerp(u[0], 10e-6, 30e-6);
    let i0 = ic * lerp(u[1], 0.80, 0.98);
    let rl = lerp(u[2], 20.0, 50.0);
    let gain = 100.0;
    let full = gain * i0 * rl;
    let config = DetectorConfig {
        name: "random".into(),
        critical_current: ic,
        kinetic_inductance: log_lerp(u[3], 0.2e-6, 3e-6),
        load_resistance: rl,
        shunt_resistance: 50.0,
        amplifier_gain: gain,
        discriminator_threshold: full * lerp(u[4], 0.0, 0.9),
        operating_bias: Some(i0),
        base_efficiency: lerp(u[5], 0.01, 0.5),
        dark_count_rate: if u[6] < 0.2 { 0.0 } else { log_lerp(u[6], 1.0, 1e4) },
        curve_file: None,
        curve_anchor: None,
        note: None,
    };
    let params = DetectorParams::new(&config).expect("random config is valid");
    let anchor_ratio = lerp(u[7], 0.5, 0.8);
    let anchor = params.base_efficiency() * log_lerp(u[8], 1e-4, 0.3);
    let curve = EfficiencyCurve::two_point(&params, anchor_ratio, anchor).expect("anchor below eta0");
    Detector::new(params, curve, "random")
}

/// `u` needs 11 entries; `slots` fixes the train length.
pub fn case_from(u: &[f64], slots: usize) -> Case {
    let detector = detector_from(u);
    let slot_period = log_lerp(u[9], 0.2e-9, 20e-9);
    let photons = if u[10] < 0.1 { 0.0 } else { log_lerp(u[10], 1e-3, 1e4) };
    let mode = if u[10] * 1e3 % 1.0 < 0.5 {
        GateMode::ExactAge
    } else {
        GateMode::PaperApprox
    };
    Case {
        detector,
        train: PulseTrain::new(photons, slot_period, slots).unwrap(),
        mode,
    }
}
