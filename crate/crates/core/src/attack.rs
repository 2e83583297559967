//! Blinding and port-control arithmetic against a pair of detectors, and the
//! coincidence-monitor estimate that exposes it.

use crate::detector::click_probability;
use crate::device::Detector;
use crate::error::{Error, Result};
use crate::pulse_train::{gate_age, steady_state, PulseTrain, SteadyStateOptions};
use crate::units::{dbm_to_watts, photon_energy, photons_from_power, DEFAULT_WAVELENGTH};

/// Default allowed escape probability per blinding pulse.
pub const DEFAULT_ESCAPE: f64 = 1e-5;
/// Default "blinded" count-rate ceiling, counts/s.
pub const DEFAULT_MAX_COUNT_RATE: f64 = 300.0;
/// Normal-operation coincidence probability per slot, back-computed from a
/// monitored rate of 3.5e-5 per slot being 29000 times the baseline.
pub const BASELINE_COINCIDENCE_PER_SLOT: f64 = 3.5e-5 / 29000.0;
/// Spacing of the forcing double pulse, seconds.
pub const DOUBLE_PULSE_SPACING: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AttackPlan {
    pub target: String,
    /// Interval of the tailored blinding train, seconds.
    pub blinding_period: f64,
    pub photons_per_blinding_pulse: f64,
    /// Probability each blinding pulse re-trips the target.
    pub retrip_probability: f64,
    pub forcing_photons_per_pulse: Option<f64>,
}

impl AttackPlan {
    pub fn with_forcing(mut self, photons_per_pulse: f64) -> Self {
        self.forcing_photons_per_pulse = Some(photons_per_pulse);
        self
    }

    /// Checks the plan against its target.
    pub fn validate(&self, target: &Detector) -> Result<()> {
        let t_th = target.params.threshold_recovery_time();
        if !(self.blinding_period > 0.0 && self.blinding_period <= t_th * (1.0 + 1e-12)) {
            return Err(Error::config(
                "blinding_period",
                self.blinding_period,
                format!(
                    "must lie in (0, {t_th:e}] s, the threshold recovery time of {}",
                    target.params.name()
                ),
            ));
        }
        if !(0.0..=1.0).contains(&self.retrip_probability) {
            return Err(Error::config(
                "retrip_probability",
                self.retrip_probability,
                "must lie in [0, 1]",
            ));
        }
        if !(self.photons_per_blinding_pulse >= 0.0 && self.photons_per_blinding_pulse.is_finite()) {
            return Err(Error::config(
                "photons_per_blinding_pulse",
                self.photons_per_blinding_pulse,
                "must be finite and >= 0",
            ));
        }
        if let Some(n) = self.forcing_photons_per_pulse {
            if !(n >= 0.0) {
                return Err(Error::config("forcing_photons_per_pulse", n, "must be >= 0"));
            }
        }
        Ok(())
    }

    /// Average optical power of the blinding train, watts.
    pub fn blinding_power(&self, wavelength: f64) -> f64 {
        self.photons_per_blinding_pulse * photon_energy(wavelength) / self.blinding_period
    }
}

/// Tailored blinding train: one pulse per threshold recovery time, bright
/// enough that the target re-trips with probability at least 1 − ε.
pub fn blinding_schedule(target: &Detector, escape: f64) -> Result<AttackPlan> {
    if !(escape > 0.0 && escape < 1.0) {
        return Err(Error::domain("escape probability", escape, "0 < eps < 1"));
    }
    let eta = target.efficiency_at_threshold()?;
    if eta <= 0.0 {
        return Err(Error::ZeroEfficiency {
            bias_fraction: target.params.threshold_bias_fraction(),
        });
    }
    let exact = -escape.ln() / eta;
    let photons = (exact * (1.0 - 1e-12)).ceil().max(1.0);
    Ok(AttackPlan {
        target: target.params.name().to_string(),
        blinding_period: target.params.threshold_recovery_time(),
        photons_per_blinding_pulse: photons,
        retrip_probability: -(-photons * eta).exp_m1(),
        forcing_photons_per_pulse: None,
    })
}

/// Photons per pulse giving single-pulse click probability `p1` at
/// efficiency `eta`.
pub fn forcing_photons_for(p1: f64, eta: f64) -> Result<f64> {
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(Error::domain("p1", p1, "0 < p1 < 1"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::domain("eta", eta, "0 < eta <= 1"));
    }
    Ok(-(-p1).ln_1p() / eta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlindingSearch {
    pub bracket_dbm: (f64, f64),
    pub coarse_step_db: f64,
    pub tolerance_db: f64,
    pub wavelength: f64,
    pub steady: SteadyStateOptions,
}

impl Default for BlindingSearch {
    fn default() -> Self {
        Self {
            bracket_dbm: (-90.0, 10.0),
            coarse_step_db: 1.0,
            tolerance_db: 0.1,
            wavelength: DEFAULT_WAVELENGTH,
            steady: SteadyStateOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlindingPower {
    pub watts: f64,
    pub dbm: f64,
    pub photons_per_pulse: f64,
    /// Steady-state click rate at the returned power, counts/s.
    pub rate: f64,
    pub bracket_dbm: (f64, f64),
    pub warning: Option<String>,
}

/// Smallest power on the blinded side of the count-rate peak whose
/// steady-state click rate stays at or below `max_count_rate`.
///
/// The rate rises with power and then collapses once the wire can no longer
/// recover between pulses. The search walks down from the top of the
/// bracket in coarse steps until the rate first exceeds the bound, then
/// bisects that step to `tolerance_db`.
pub fn min_blinding_power(
    target: &Detector,
    rep_rate: f64,
    max_count_rate: f64,
    search: &BlindingSearch,
) -> Result<BlindingPower> {
    if !(max_count_rate > 0.0) {
        return Err(Error::domain("max_count_rate", max_count_rate, "> 0"));
    }
    if !(rep_rate > 0.0 && rep_rate.is_finite()) {
        return Err(Error::domain("rep_rate", rep_rate, "finite and > 0"));
    }
    let (lo, hi) = search.bracket_dbm;
    if !(lo < hi) || !(search.coarse_step_db > 0.0) || !(search.tolerance_db > 0.0) {
        return Err(Error::Search(format!(
            "bad bracket [{lo}, {hi}] dBm / step {} / tolerance {}",
            search.coarse_step_db, search.tolerance_db
        )));
    }
    let rate = |dbm: f64| -> Result<f64> {
        let mu = photons_from_power(dbm_to_watts(dbm), rep_rate, search.wavelength)?;
        let train = PulseTrain::new(mu, 1.0 / rep_rate, 1)?;
        steady_state(target, &train, &search.steady)
            .map(|t| t.steady_click_rate)
            .map_err(|e| Error::AtPower {
                power_dbm: dbm,
                source: Box::new(e),
            })
    };
    let result = |dbm: f64, r: f64, warning: Option<String>| -> Result<BlindingPower> {
        let watts = dbm_to_watts(dbm);
        Ok(BlindingPower {
            watts,
            dbm,
            photons_per_pulse: photons_from_power(watts, rep_rate, search.wavelength)?,
            rate: r,
            bracket_dbm: (lo, hi),
            warning,
        })
    };

    if max_count_rate.is_infinite() {
        let r = rate(lo)?;
        return result(
            lo,
            r,
            Some("unbounded count-rate limit; returning the lower bracket edge".into()),
        );
    }
    let top = rate(hi)?;
    if top > max_count_rate {
        return Err(Error::Search(format!(
            "rate {top:.6e} c/s at the upper bracket edge {hi} dBm exceeds {max_count_rate} c/s; \
             the detector is not blinded anywhere in [{lo}, {hi}] dBm"
        )));
    }

    // walk down: `below` always satisfies the bound
    let (mut below, mut below_rate) = (hi, top);
    let mut above = None;
    while below > lo {
        let p = (below - search.coarse_step_db).max(lo);
        let r = rate(p)?;
        if r > max_count_rate {
            above = Some(p);
            break;
        }
        below = p;
        below_rate = r;
    }
    let Some(mut above) = above else {
        return result(
            below,
            below_rate,
            Some(format!(
                "rate never exceeds {max_count_rate} c/s in [{lo}, {hi}] dBm; returning the lower bracket edge"
            )),
        );
    };
    while below - above > search.tolerance_db {
        let mid = 0.5 * (below + above);
        let r = rate(mid)?;
        if r > max_count_rate {
            above = mid;
        } else {
            below = mid;
            below_rate = r;
        }
    }
    result(below, below_rate, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcingReport {
    pub forcing_photons_per_pulse: f64,
    /// Forced detector, click probability of the first pulse.
    pub p1: f64,
    /// Forced detector, click probability of the second pulse given no
    /// transition on the first.
    pub p2: f64,
    /// Forced detector, click on either pulse.
    pub cumulative: f64,
    /// Blinded detector, no transition on the first forcing pulse.
    pub blinded_no_transition_first: f64,
    /// Blinded detector, registered click on the second forcing pulse.
    pub blinded_click_second: f64,
    /// Blinded detector, escape probability per blinding pulse.
    pub blinding_escape: f64,
}

/// Transition probabilities of the blinded target for the two forcing
/// pulses: the first lands in the last sub-threshold slot of its recovery,
/// the second one slot later, above threshold.
struct TargetExposure {
    no_transition_first: f64,
    transition_second: f64,
    /// Re-trip at the second pulse after resetting on the first.
    retrip_after_reset: f64,
    slots: usize,
}

fn target_exposure(target: &Detector, photons: f64, slot: f64) -> Result<TargetExposure> {
    let k = gate_age(target, slot);
    let gamma = target.params.dark_count_rate() * slot;
    let hazard = |age: usize| -> Result<f64> {
        let eta = target.efficiency_after(age as f64 * slot)?;
        click_probability(photons, eta, gamma)
    };
    Ok(TargetExposure {
        no_transition_first: 1.0 - hazard(k - 1)?,
        transition_second: hazard(k)?,
        retrip_after_reset: hazard(1)?,
        slots: k,
    })
}

fn forced_pulses(forced: &Detector, photons: f64, slot: f64) -> Result<(f64, f64)> {
    let gamma = forced.params.dark_count_rate() * slot;
    let p1 = click_probability(photons, forced.params.base_efficiency(), gamma)?;
    // no transition on pulse 1 leaves the wire at full bias
    Ok((p1, p1))
}

fn forcing_photons(plan: &AttackPlan) -> Result<f64> {
    plan.forcing_photons_per_pulse.ok_or_else(|| {
        Error::config(
            "forcing_photons_per_pulse",
            "none",
            "the plan carries no forcing intensity",
        )
    })
}

/// Double-pulse forcing of the unblinded port, with the blinded port's
/// exposure to the same pulses.
pub fn double_pulse_port_control(blinded: &Detector, forced: &Detector, plan: &AttackPlan) -> Result<ForcingReport> {
    plan.validate(blinded)?;
    let photons = forcing_photons(plan)?;
    let (p1, p2) = forced_pulses(forced, photons, DOUBLE_PULSE_SPACING)?;
    let target = target_exposure(blinded, photons, DOUBLE_PULSE_SPACING)?;
    Ok(ForcingReport {
        forcing_photons_per_pulse: photons,
        p1,
        p2,
        cumulative: 1.0 - (1.0 - p1) * (1.0 - p2),
        blinded_no_transition_first: target.no_transition_first,
        blinded_click_second: target.no_transition_first * target.transition_second,
        blinding_escape: 1.0 - plan.retrip_probability,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountermeasureReport {
    /// Forced port clicks on the second pulse only.
    pub forced_second_only: f64,
    /// Blinded port: no transition on pulse 1, registered click on pulse 2.
    pub target_click_exact: f64,
    /// Same, using the previous-slot gate (includes the reset-and-re-trip
    /// branch in the pulse-2 transition probability).
    pub target_click_paper_approx: f64,
    pub per_event_exact: f64,
    pub per_event_paper_approx: f64,
    /// Slots per blinding cycle.
    pub blinding_interval_slots: usize,
    pub normalized_exact: f64,
    pub normalized_paper_approx: f64,
    pub baseline: f64,
    pub ratio_exact: f64,
    pub ratio_paper_approx: f64,
}

/// Probability that both ports click in the same slot during a forcing
/// event, per event and per slot, against a normal-operation baseline.
pub fn coincidence_countermeasure(
    blinded: &Detector,
    forced: &Detector,
    plan: &AttackPlan,
    baseline: f64,
) -> Result<CountermeasureReport> {
    if !(baseline > 0.0) {
        return Err(Error::domain("baseline coincidence", baseline, "> 0"));
    }
    plan.validate(blinded)?;
    let photons = forcing_photons(plan)?;
    let (p1, p2) = forced_pulses(forced, photons, DOUBLE_PULSE_SPACING)?;
    let forced_second_only = (1.0 - p1) * p2;
    let t = target_exposure(blinded, photons, DOUBLE_PULSE_SPACING)?;

    let target_click_exact = t.no_transition_first * t.transition_second;
    let s_off_1 = t.no_transition_first;
    let s_on_2 = t.no_transition_first * t.transition_second + (1.0 - s_off_1) * t.retrip_after_reset;
    let target_click_paper_approx = s_on_2 * s_off_1;

    let per_event_exact = target_click_exact * forced_second_only;
    let per_event_paper_approx = target_click_paper_approx * forced_second_only;
    let slots = t.slots as f64;
    Ok(CountermeasureReport {
        forced_second_only,
        target_click_exact,
        target_click_paper_approx,
        per_event_exact,
        per_event_paper_approx,
        blinding_interval_slots: t.slots,
        normalized_exact: per_event_exact / slots,
        normalized_paper_approx: per_event_paper_approx / slots,
        baseline,
        ratio_exact: per_event_exact / slots / baseline,
        ratio_paper_approx: per_event_paper_approx / slots / baseline,
    })
}

/// Average power to blind `n_detectors` detectors behind a DPS receiver
/// with 1-ns double pulses: each detector needs the full blinding energy
/// in both halves of the interferometer, so energy scales with n².
pub fn dps_double_pulse_power(plan: &AttackPlan, n_detectors: u32, wavelength: f64) -> f64 {
    let scale = f64::from(n_detectors).powi(2);
    scale * plan.blinding_power(wavelength)
}
