//! Detector response to a periodic train of coherent pulses.
//!
//! Between pulses the wire is either superconducting or recovering from its
//! last normal transition; the only state that matters for the next slot is
//! the age of that transition. Writing S_on(n) for the probability that the
//! wire is driven normal in slot n, the probability of no transition is the
//! renewal sum
//!
//! ```text
//! S_off(n) = e^{-n(γ + μη0)}
//!          + Σ_{m=1}^{n-1} S_on(n-m) · Π_{k=1}^{m} e^{-γ - μ η(k)}
//! ```
//!
//! where μ is the mean photon number per pulse, γ the per-slot dark-count
//! exponent and η(k) the efficiency at the bias reached k slots after a
//! reset. A transition registers as a click only if the bias at that slot
//! produces a pulse above the discriminator threshold; the click
//! probability is P_on(n) = S_on(n)·g(n) with g chosen by [`GateMode`].

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::device::Detector;
use crate::error::{Error, Result};
use crate::units::{self, DEFAULT_WAVELENGTH};

/// Relative survival deficit at which the bias is treated as fully
/// recovered when truncating the recursion memory.
pub const TRUNCATION_DEFICIT: f64 = 1e-4;
pub const DEFAULT_WORK_BUDGET: u64 = 400_000_000;
pub const DEFAULT_REL_TOL: f64 = 1e-6;
pub const CONVERGENCE_WINDOW: usize = 10;
/// Per-slot click probabilities below this count as zero when testing
/// convergence.
pub const CONVERGENCE_FLOOR: f64 = 1e-15;
pub const DEFAULT_MAX_SLOTS: usize = 500_000;
/// Discriminator counting-rate ceiling, counts/s.
pub const DEFAULT_R_MAX: f64 = 68e6;

/// How the registration probability g(n) is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateMode {
    /// g(n) = S_off(n−1), g(1) = 1: a transition registers unless the wire
    /// also went normal in the preceding slot.
    PaperApprox,
    /// g(n) = P(bias at slot n > threshold), i.e. the probability that the
    /// pulse arrives more than t_th/T slots after the last transition.
    ExactAge,
}

impl GateMode {
    pub const ALL: [GateMode; 2] = [GateMode::PaperApprox, GateMode::ExactAge];
}

impl fmt::Display for GateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateMode::PaperApprox => "paper-approx",
            GateMode::ExactAge => "exact-age",
        })
    }
}

impl FromStr for GateMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-approx" => Ok(GateMode::PaperApprox),
            "exact-age" => Ok(GateMode::ExactAge),
            other => Err(Error::config("mode", other, "expected paper-approx or exact-age")),
        }
    }
}

/// Source of the per-slot dark-count exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DarkCounts {
    /// γ = dark_count_rate · T at every bias.
    #[default]
    Constant,
    /// γ follows the curve's dark-rate table at the instantaneous bias.
    BiasDependent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTrain {
    pub mean_photons_per_pulse: f64,
    pub slot_period: f64,
    pub num_slots: usize,
    pub wavelength: f64,
}

impl PulseTrain {
    pub fn new(mean_photons_per_pulse: f64, slot_period: f64, num_slots: usize) -> Result<Self> {
        if !(mean_photons_per_pulse >= 0.0) || !mean_photons_per_pulse.is_finite() {
            return Err(Error::domain(
                "mean photons per pulse",
                mean_photons_per_pulse,
                "finite and >= 0",
            ));
        }
        if !(slot_period > 0.0) || !slot_period.is_finite() {
            return Err(Error::domain("slot period", slot_period, "finite and > 0 s"));
        }
        if num_slots == 0 {
            return Err(Error::domain("slot count", 0.0, ">= 1"));
        }
        Ok(Self {
            mean_photons_per_pulse,
            slot_period,
            num_slots,
            wavelength: DEFAULT_WAVELENGTH,
        })
    }

    /// Train at average optical power `power` (W) and repetition rate `rep_rate`.
    pub fn from_power(power: f64, rep_rate: f64, wavelength: f64, num_slots: usize) -> Result<Self> {
        let mu = units::photons_from_power(power, rep_rate, wavelength)?;
        let mut t = Self::new(mu, 1.0 / rep_rate, num_slots)?;
        t.wavelength = wavelength;
        Ok(t)
    }

    pub fn with_slots(mut self, num_slots: usize) -> Self {
        self.num_slots = num_slots;
        self
    }

    pub fn average_power(&self) -> f64 {
        units::power_from_photons(self.mean_photons_per_pulse, 1.0 / self.slot_period, self.wavelength)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceResult {
    pub s_off: Vec<f64>,
    pub s_on: Vec<f64>,
    pub g: Vec<f64>,
    pub p_on: Vec<f64>,
    pub slot_period: f64,
    /// p_on at the last computed slot divided by the slot period.
    pub steady_click_rate: f64,
    pub converged_at_slot: Option<usize>,
}

impl TraceResult {
    pub fn len(&self) -> usize {
        self.s_on.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_on.is_empty()
    }
}

/// Number of slots after which e^{−kβT} falls below [`TRUNCATION_DEFICIT`].
pub fn truncation_horizon(detector: &Detector, slot_period: f64) -> usize {
    let bt = detector.params.recovery_rate() * slot_period;
    ((-TRUNCATION_DEFICIT.ln()) / bt).ceil().max(1.0) as usize
}

/// Smallest pulse age (in slots) whose transition registers: the first
/// integer strictly above t_th / T. A pulse landing exactly at threshold
/// bias produces a pulse equal to V_th and is not counted.
pub fn gate_age(detector: &Detector, slot_period: f64) -> usize {
    let slots = detector.params.threshold_recovery_time() / slot_period;
    // absorb rounding just below an integer ratio
    (slots * (1.0 + 1e-12)).floor().max(0.0) as usize + 1
}

/// Per-slot exponents of the renewal recursion: λ(k) = γ(k) + μ·η(k) for a
/// pulse k slots after the last transition, and λ_full for a wire that has
/// never transitioned.
#[derive(Debug, Clone)]
pub struct SlotModel {
    slot_period: f64,
    full: f64,
    ages: Vec<f64>,
    gate_age: usize,
}

impl SlotModel {
    /// Tabulates λ(k) for k = 1..=max_age.
    pub fn new(detector: &Detector, train: &PulseTrain, dark: DarkCounts, max_age: usize) -> Result<Self> {
        let p = &detector.params;
        let t = train.slot_period;
        let mu = train.mean_photons_per_pulse;
        let dark_at = |i_b: f64| -> Result<f64> {
            match dark {
                DarkCounts::Constant => Ok(p.dark_count_rate() * t),
                DarkCounts::BiasDependent => detector
                    .curve
                    .dark_rate_at_bias(p, i_b)
                    .map(|r| r * t)
                    .ok_or_else(|| Error::config("dark", "bias-dependent", "curve has no dark-rate table")),
            }
        };
        let full = dark_at(p.operating_bias())? + mu * p.base_efficiency();
        let mut ages = Vec::with_capacity(max_age);
        for k in 1..=max_age {
            let i_b = p.bias_current(k as f64 * t)?;
            let eta = detector.curve.efficiency_at_bias(p, i_b)?;
            ages.push(dark_at(i_b)? + mu * eta);
        }
        Ok(Self {
            slot_period: t,
            full,
            ages,
            gate_age: gate_age(detector, t),
        })
    }

    /// e^{−λ(age)}; ages beyond the table use the full-bias factor.
    pub fn survival(&self, age: usize) -> f64 {
        (-self.exponent(age)).exp()
    }

    pub fn exponent(&self, age: usize) -> f64 {
        if age == 0 || age > self.ages.len() {
            self.full
        } else {
            self.ages[age - 1]
        }
    }

    pub fn full_exponent(&self) -> f64 {
        self.full
    }

    pub fn gate_age(&self) -> usize {
        self.gate_age
    }

    pub fn tabulated_ages(&self) -> usize {
        self.ages.len()
    }

    pub fn slot_period(&self) -> f64 {
        self.slot_period
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub mode: GateMode,
    /// Replace per-age factors beyond the truncation horizon by the
    /// full-bias factor, making each slot O(horizon) instead of O(n).
    pub truncate: bool,
    pub work_budget: u64,
    pub dark: DarkCounts,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            mode: GateMode::ExactAge,
            truncate: false,
            work_budget: DEFAULT_WORK_BUDGET,
            dark: DarkCounts::Constant,
        }
    }
}

impl EvolveOptions {
    pub fn mode(mode: GateMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }
}

/// Slot-by-slot evaluation of the renewal recursion.
#[derive(Debug, Clone)]
pub struct Recursion {
    model: SlotModel,
    mode: GateMode,
    /// Memory length M: products are tabulated for ages 1..=M.
    memory: usize,
    truncated: bool,
    /// Π_{k=1}^{m} e^{−λ(k)} for m = 1..=memory.
    survival_products: Vec<f64>,
    s_on: Vec<f64>,
    s_off: Vec<f64>,
    /// Contribution of transitions older than `memory` slots (truncated only).
    tail: f64,
    /// P(last transition at least gate_age−1 slots before the next pulse).
    next_gate: f64,
}

impl Recursion {
    /// Exact recursion over at most `slots` slots.
    pub fn exact(
        detector: &Detector,
        train: &PulseTrain,
        mode: GateMode,
        dark: DarkCounts,
        slots: usize,
    ) -> Result<Self> {
        let model = SlotModel::new(detector, train, dark, slots)?;
        Ok(Self::from_model(model, mode, slots, false))
    }

    /// Recursion with memory truncated at max(horizon, gate age).
    pub fn truncated(detector: &Detector, train: &PulseTrain, mode: GateMode, dark: DarkCounts) -> Result<Self> {
        let k = truncation_horizon(detector, train.slot_period).max(gate_age(detector, train.slot_period));
        let model = SlotModel::new(detector, train, dark, k)?;
        Ok(Self::from_model(model, mode, k, true))
    }

    fn from_model(model: SlotModel, mode: GateMode, memory: usize, truncated: bool) -> Self {
        let mut survival_products = Vec::with_capacity(memory);
        let mut acc = 0.0;
        for age in 1..=memory {
            acc += model.exponent(age);
            survival_products.push((-acc).exp());
        }
        Self {
            model,
            mode,
            memory,
            truncated,
            survival_products,
            s_on: Vec::new(),
            s_off: Vec::new(),
            tail: 0.0,
            next_gate: 1.0,
        }
    }

    pub fn model(&self) -> &SlotModel {
        &self.model
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn slots_done(&self) -> usize {
        self.s_on.len()
    }

    /// Advances one slot and returns (s_off, s_on, g, p_on) for it.
    pub fn step(&mut self) -> (f64, f64, f64, f64) {
        let n = self.s_on.len() + 1;
        if !self.truncated {
            assert!(n <= self.memory, "exact recursion sized for {} slots", self.memory);
        }
        let gate_from = self.model.gate_age.saturating_sub(1).max(1);

        let never = (-(n as f64) * self.model.full).exp();
        let reach = (n - 1).min(self.memory);
        let mut total = never + self.tail;
        let mut gated = never + self.tail;
        for m in 1..=reach {
            let term = self.s_on[n - m - 1] * self.survival_products[m - 1];
            total += term;
            if m >= gate_from {
                gated += term;
            }
        }
        let s_off = total.clamp(0.0, 1.0);
        let s_on = (1.0 - total).clamp(0.0, 1.0);

        let g = if n == 1 {
            1.0
        } else {
            match self.mode {
                GateMode::PaperApprox => self.s_off[n - 2],
                GateMode::ExactAge => self.next_gate,
            }
        };
        let p_on = s_on * g;

        self.s_on.push(s_on);
        self.s_off.push(s_off);
        self.next_gate = if self.model.gate_age <= 1 {
            1.0
        } else {
            gated.clamp(0.0, 1.0)
        };
        if self.truncated && n > self.memory {
            // slot n - memory leaves the tabulated window at the next step
            let leaving = self.s_on[n - self.memory - 1] * self.survival_products[self.memory - 1];
            self.tail = (-self.model.full).exp() * (self.tail + leaving);
        }
        (s_off, s_on, g, p_on)
    }
}

/// Recursion over `train.num_slots` slots with the given gate mode.
pub fn evolve(detector: &Detector, train: &PulseTrain, mode: GateMode) -> Result<TraceResult> {
    evolve_with(detector, train, &EvolveOptions::mode(mode))
}

pub fn evolve_with(detector: &Detector, train: &PulseTrain, opts: &EvolveOptions) -> Result<TraceResult> {
    let n = train.num_slots;
    let mut rec = if opts.truncate {
        let r = Recursion::truncated(detector, train, opts.mode, opts.dark)?;
        check_budget(n, n as u64 * r.memory() as u64, opts.work_budget)?;
        r
    } else {
        check_budget(n, (n as u64) * (n as u64 - 1) / 2, opts.work_budget)?;
        Recursion::exact(detector, train, opts.mode, opts.dark, n)?
    };
    let mut trace = empty_trace(train.slot_period, n);
    for _ in 0..n {
        push(&mut trace, rec.step());
    }
    trace.steady_click_rate = trace.p_on.last().copied().unwrap_or(0.0) / train.slot_period;
    Ok(trace)
}

fn check_budget(slots: usize, work: u64, budget: u64) -> Result<()> {
    if work > budget {
        Err(Error::WorkBudget { slots, work, budget })
    } else {
        Ok(())
    }
}

fn empty_trace(slot_period: f64, capacity: usize) -> TraceResult {
    TraceResult {
        s_off: Vec::with_capacity(capacity),
        s_on: Vec::with_capacity(capacity),
        g: Vec::with_capacity(capacity),
        p_on: Vec::with_capacity(capacity),
        slot_period,
        steady_click_rate: 0.0,
        converged_at_slot: None,
    }
}

fn push(trace: &mut TraceResult, (s_off, s_on, g, p_on): (f64, f64, f64, f64)) {
    trace.s_off.push(s_off);
    trace.s_on.push(s_on);
    trace.g.push(g);
    trace.p_on.push(p_on);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateOptions {
    pub mode: GateMode,
    pub rel_tol: f64,
    pub max_slots: usize,
    pub dark: DarkCounts,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            mode: GateMode::ExactAge,
            rel_tol: DEFAULT_REL_TOL,
            max_slots: DEFAULT_MAX_SLOTS,
            dark: DarkCounts::Constant,
        }
    }
}

fn settled(curr: f64, prev: f64, rel_tol: f64) -> bool {
    (curr - prev).abs() / curr.max(CONVERGENCE_FLOOR) < rel_tol
}

/// Runs the (truncated) recursion until both s_on and p_on have changed by
/// less than `rel_tol` relative for [`CONVERGENCE_WINDOW`] consecutive slots,
/// after a burn-in of twice the recursion memory. The train's slot count is
/// ignored; `opts.max_slots` bounds the run.
pub fn steady_state(detector: &Detector, train: &PulseTrain, opts: &SteadyStateOptions) -> Result<TraceResult> {
    if !(opts.rel_tol > 0.0) {
        return Err(Error::domain("rel_tol", opts.rel_tol, "> 0"));
    }
    let mut rec = Recursion::truncated(detector, train, opts.mode, opts.dark)?;
    let burn_in = 2 * rec.memory();
    let mut trace = empty_trace(train.slot_period, burn_in * 4);
    let mut calm = 0;
    for n in 1..=opts.max_slots {
        push(&mut trace, rec.step());
        if n < 2 {
            continue;
        }
        let ok = settled(trace.p_on[n - 1], trace.p_on[n - 2], opts.rel_tol)
            && settled(trace.s_on[n - 1], trace.s_on[n - 2], opts.rel_tol);
        calm = if ok { calm + 1 } else { 0 };
        if n > burn_in && calm >= CONVERGENCE_WINDOW {
            trace.converged_at_slot = Some(n);
            trace.steady_click_rate = trace.p_on[n - 1] / train.slot_period;
            return Ok(trace);
        }
    }
    let last = trace.p_on.last().copied().unwrap_or(0.0);
    trace.steady_click_rate = last / train.slot_period;
    Err(Error::NoConvergence {
        slots: opts.max_slots,
        last_p_on: last,
        trace: Box::new(trace),
    })
}

/// Steady-state registered click rate, counts/s.
pub fn steady_state_click_rate(detector: &Detector, train: &PulseTrain, rel_tol: f64) -> Result<f64> {
    let opts = SteadyStateOptions {
        rel_tol,
        ..SteadyStateOptions::default()
    };
    Ok(steady_state(detector, train, &opts)?.steady_click_rate)
}

/// Counting-rate ceiling of the pulse discriminator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Saturation {
    /// min(rate, r_max)
    #[default]
    Hard,
    /// rate / (1 + rate/r_max)
    NonParalyzable,
}

impl fmt::Display for Saturation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Saturation::Hard => "hard",
            Saturation::NonParalyzable => "nonparalyzable",
        })
    }
}

impl FromStr for Saturation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(Saturation::Hard),
            "nonparalyzable" => Ok(Saturation::NonParalyzable),
            other => Err(Error::config("saturation", other, "expected hard or nonparalyzable")),
        }
    }
}

/// Rate observed behind a discriminator that cannot count faster than
/// `r_max`. Expects `rate >= 0` and `r_max > 0`.
pub fn apply_discriminator_limit(rate: f64, r_max: f64, mode: Saturation) -> f64 {
    match mode {
        Saturation::Hard => rate.min(r_max),
        Saturation::NonParalyzable => rate / (1.0 + rate / r_max),
    }
}

pub use crate::units::photons_from_power;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub rep_rate: f64,
    pub wavelength: f64,
    pub powers_dbm: Vec<f64>,
    pub r_max: f64,
    pub saturation: Saturation,
    pub steady: SteadyStateOptions,
}

impl SweepConfig {
    pub fn new(rep_rate: f64, powers_dbm: Vec<f64>) -> Self {
        Self {
            rep_rate,
            wavelength: DEFAULT_WAVELENGTH,
            powers_dbm,
            r_max: DEFAULT_R_MAX,
            saturation: Saturation::Hard,
            steady: SteadyStateOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub power_dbm: f64,
    pub photons_per_pulse: f64,
    pub model_rate_hz: f64,
    pub observed_rate_hz: f64,
}

/// Count rate versus input power. Rows are computed in parallel and returned
/// in input order.
pub fn power_sweep(detector: &Detector, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.powers_dbm.is_empty() {
        return Err(Error::config("power_dbm", "[]", "power list is empty"));
    }
    if !(cfg.r_max > 0.0) {
        return Err(Error::config("r_max", cfg.r_max, "must be > 0"));
    }
    cfg.powers_dbm
        .par_iter()
        .map(|&dbm| {
            sweep_point(detector, cfg, dbm).map_err(|e| Error::AtPower {
                power_dbm: dbm,
                source: Box::new(e),
            })
        })
        .collect()
}

fn sweep_point(detector: &Detector, cfg: &SweepConfig, dbm: f64) -> Result<SweepRow> {
    let train = PulseTrain::from_power(units::dbm_to_watts(dbm), cfg.rep_rate, cfg.wavelength, 1)?;
    let model = steady_state(detector, &train, &cfg.steady)?.steady_click_rate;
    Ok(SweepRow {
        power_dbm: dbm,
        photons_per_pulse: train.mean_photons_per_pulse,
        model_rate_hz: model,
        observed_rate_hz: apply_discriminator_limit(model, cfg.r_max, cfg.saturation),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::EfficiencyCurve;
    use crate::detector::{DetectorConfig, DetectorParams};

    /// Detector with τ = 1 ns and zero dark counts; the curve steepness is
    /// chosen so f at one-slot age equals `f_age1` for T = 1 ns.
    fn toy(f_age1: f64, dark: f64) -> Detector {
        let params = DetectorParams::new(&DetectorConfig {
            name: "toy".into(),
            critical_current: 10e-6,
            kinetic_inductance: 25e-9,
            load_resistance: 25.0,
            shunt_resistance: 50.0,
            amplifier_gain: 100.0,
            discriminator_threshold: 10e-3,
            operating_bias: Some(9e-6),
            base_efficiency: 0.5,
            dark_count_rate: dark,
            curve_file: None,
            curve_anchor: None,
            note: None,
        })
        .unwrap();
        // f(age) = exp(-c·e^{-βkT}); βT = 1
        let c = -f_age1.ln() / (-1f64).exp();
        let ratio = 0.5;
        let anchor = 0.5 * (-c * (1.0 - ratio)).exp();
        let curve = EfficiencyCurve::two_point(&params, ratio, anchor).unwrap();
        Detector::new(params, curve, "toy")
    }

    #[test]
    fn toy_curve_value() {
        let d = toy(0.5, 0.0);
        let f = d.efficiency_after(1e-9).unwrap() / 0.5;
        assert!((f - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_slot_hand_enumeration() {
        // μη0 = ln 2, f(age 1) = 0.5, γ = 0
        let d = toy(0.5, 0.0);
        let train = PulseTrain::new(2f64.ln() / 0.5, 1e-9, 2).unwrap();
        let tr = evolve(&d, &train, GateMode::PaperApprox).unwrap();
        assert!((tr.s_off[0] - 0.5).abs() < 1e-15);
        let s_off2 = 0.25 + 0.5 * 2f64.powf(-0.5);
        assert!((tr.s_off[1] - s_off2).abs() < 1e-15);
        assert!((tr.s_off[1] - 0.60355).abs() < 1e-5);
        assert!((tr.s_on[1] - 0.39645).abs() < 1e-5);
        assert!((tr.p_on[1] - 0.19822).abs() < 1e-5);
        assert_eq!(tr.g[0], 1.0);
    }

    #[test]
    fn full_recovery_gives_half_every_slot() {
        // τ = 1 ns, T = 100 ns: βT = 100
        let d = toy(0.5, 0.0);
        let train = PulseTrain::new(2f64.ln() / 0.5, 100e-9, 50).unwrap();
        let tr = evolve(&d, &train, GateMode::ExactAge).unwrap();
        for s in &tr.s_on {
            assert!((s - 0.5).abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn dark_and_empty_never_clicks() {
        let d = toy(0.5, 0.0);
        let train = PulseTrain::new(0.0, 1e-9, 40).unwrap();
        for mode in GateMode::ALL {
            let tr = evolve(&d, &train, mode).unwrap();
            assert!(tr.s_off.iter().all(|&x| x == 1.0));
            assert!(tr.p_on.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn truncated_matches_exact_inside_horizon() {
        let d = toy(0.3, 1e6);
        let train = PulseTrain::new(2.0, 1e-9, 60).unwrap();
        let exact = evolve(&d, &train, GateMode::ExactAge).unwrap();
        let opts = EvolveOptions {
            truncate: true,
            ..EvolveOptions::default()
        };
        let trunc = evolve_with(&d, &train, &opts).unwrap();
        let k = truncation_horizon(&d, 1e-9);
        for n in 0..60 {
            let tol = if n < k { 1e-15 } else { 1e-3 };
            assert!((exact.s_on[n] - trunc.s_on[n]).abs() <= tol, "slot {n}");
        }
    }

    #[test]
    fn work_budget_enforced() {
        let d = toy(0.5, 0.0);
        let train = PulseTrain::new(1.0, 1e-9, 10_000).unwrap();
        let opts = EvolveOptions {
            work_budget: 1_000,
            ..EvolveOptions::default()
        };
        assert!(matches!(evolve_with(&d, &train, &opts), Err(Error::WorkBudget { .. })));
        let opts = EvolveOptions {
            work_budget: 1_000_000,
            truncate: true,
            ..EvolveOptions::default()
        };
        assert!(evolve_with(&d, &train, &opts).is_ok());
    }

    #[test]
    fn steady_state_iid_limit() {
        let d = toy(0.5, 1e5);
        let train = PulseTrain::new(0.7, 100e-9, 1).unwrap();
        let rate = steady_state_click_rate(&d, &train, 1e-9).unwrap();
        let x: f64 = 1e5 * 100e-9 + 0.7 * 0.5;
        let expect = -(-x).exp_m1() / 100e-9;
        assert!((rate - expect).abs() <= 1e-9 * expect, "{rate} vs {expect}");
    }

    #[test]
    fn steady_state_dark_only() {
        let d = Detector::preset("ch5").unwrap();
        let train = PulseTrain::new(0.0, 1e-9, 1).unwrap();
        let rate = steady_state_click_rate(&d, &train, 1e-6).unwrap();
        assert!((rate - 100.0).abs() < 0.01, "{rate}");
    }

    #[test]
    fn steady_state_rejects_bad_tolerance() {
        let d = toy(0.5, 0.0);
        let train = PulseTrain::new(1.0, 1e-9, 1).unwrap();
        assert!(steady_state_click_rate(&d, &train, 0.0).is_err());
    }

    #[test]
    fn no_convergence_carries_trace() {
        let d = Detector::preset("ch5").unwrap();
        let train = PulseTrain::new(50.0, 1e-9, 1).unwrap();
        let opts = SteadyStateOptions {
            max_slots: 100,
            ..SteadyStateOptions::default()
        };
        match steady_state(&d, &train, &opts) {
            Err(Error::NoConvergence { trace, slots, .. }) => {
                assert_eq!(slots, 100);
                assert_eq!(trace.len(), 100);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn discriminator_limits() {
        assert_eq!(apply_discriminator_limit(1e9, 68e6, Saturation::Hard), 6.8e7);
        assert_eq!(apply_discriminator_limit(0.0, 68e6, Saturation::Hard), 0.0);
        assert_eq!(apply_discriminator_limit(0.0, 68e6, Saturation::NonParalyzable), 0.0);
        assert_eq!(apply_discriminator_limit(68e6, 68e6, Saturation::NonParalyzable), 34e6);
    }

    #[test]
    fn mode_strings() {
        for m in GateMode::ALL {
            assert_eq!(m.to_string().parse::<GateMode>().unwrap(), m);
        }
        assert!("bogus".parse::<GateMode>().is_err());
        assert_eq!(
            "nonparalyzable".parse::<Saturation>().unwrap(),
            Saturation::NonParalyzable
        );
    }

    #[test]
    fn sweep_rejects_empty() {
        let d = Detector::preset("ch5").unwrap();
        assert!(power_sweep(&d, &SweepConfig::new(1e9, vec![])).is_err());
    }

    #[test]
    fn sweep_very_dim_is_light_dominated() {
        let d = Detector::preset("ch5").unwrap();
        let rows = power_sweep(&d, &SweepConfig::new(1e9, vec![-90.0])).unwrap();
        assert!((rows[0].photons_per_pulse - 0.0078).abs() < 1e-4);
        // μη0 ≈ 1.4e-3 per slot dominates γ = 1e-7; dead time trims a few percent
        let light_only = rows[0].photons_per_pulse * 0.18 * 1e9;
        let rate = rows[0].model_rate_hz;
        assert!(rate > 0.7 * light_only && rate < light_only + 100.0, "{rate}");
    }
}
