//! Independent evaluations of the pulse-train renewal process, used to
//! check [`crate::pulse_train`]:
//!
//! * [`markov_exact`] propagates the full distribution of "slots since the
//!   last transition" one pulse at a time;
//! * [`simulate`] samples detector histories with seeded per-trial RNG
//!   streams.
//!
//! Neither shares code with the recursion beyond the detector primitives
//! (bias recovery, efficiency curve, click probability).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::detector::click_probability;
use crate::device::Detector;
use crate::error::{Error, Result};
use crate::pulse_train::{gate_age, truncation_horizon, DarkCounts, GateMode, PulseTrain, TraceResult};

/// Largest tolerated probability error from lumping ages ≥ cap.
pub const AGE_CAP_LEAK: f64 = 1e-9;

/// Default age cap: max(4K, 64) with K the recursion's truncation horizon.
pub fn default_age_cap(detector: &Detector, slot_period: f64) -> usize {
    (4 * truncation_horizon(detector, slot_period)).max(64)
}

/// Per-pulse transition probabilities by pulse age.
struct Hazards {
    by_age: Vec<f64>,
    full: f64,
}

impl Hazards {
    fn new(detector: &Detector, train: &PulseTrain, dark: DarkCounts, max_age: usize) -> Result<Self> {
        let p = &detector.params;
        let t = train.slot_period;
        let gamma = |i_b: f64| -> Result<f64> {
            Ok(match dark {
                DarkCounts::Constant => p.dark_count_rate() * t,
                DarkCounts::BiasDependent => {
                    detector
                        .curve
                        .dark_rate_at_bias(p, i_b)
                        .ok_or_else(|| Error::config("dark", "bias-dependent", "curve has no dark-rate table"))?
                        * t
                }
            })
        };
        let mu = train.mean_photons_per_pulse;
        let full = click_probability(mu, p.base_efficiency(), gamma(p.operating_bias())?)?;
        let by_age = (1..=max_age)
            .map(|age| {
                let i_b = p.bias_current(age as f64 * t)?;
                let eta = detector.curve.efficiency_at_bias(p, i_b)?;
                click_probability(mu, eta, gamma(i_b)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { by_age, full })
    }

    /// Transition probability of a pulse arriving `age` slots after the last
    /// transition; `None` means never transitioned.
    fn at(&self, age: Option<usize>) -> f64 {
        match age {
            Some(a) if a >= 1 && a <= self.by_age.len() => self.by_age[a - 1],
            _ => self.full,
        }
    }
}

/// Distribution over the age of the last transition, as of just after a
/// pulse: `ages[a]` for a = 0..cap−1, `ages[cap]` lumping all ages ≥ cap,
/// and `never` for a wire that has not transitioned yet.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeChainState {
    pub ages: Vec<f64>,
    pub never: f64,
}

impl AgeChainState {
    fn initial(cap: usize) -> Self {
        Self {
            ages: vec![0.0; cap + 1],
            never: 1.0,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.never + self.ages.iter().sum::<f64>()
    }

    /// P(age ≥ min_age), counting the never-transitioned mass.
    pub fn mass_at_least(&self, min_age: usize) -> f64 {
        self.never + self.ages.iter().skip(min_age).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactTrace {
    pub s_off: Vec<f64>,
    pub s_on: Vec<f64>,
    pub g: Vec<f64>,
    pub p_on: Vec<f64>,
    /// Largest |Σ mass − 1| seen over all slots.
    pub max_mass_error: f64,
    pub final_state: AgeChainState,
}

/// Exact per-slot probabilities from age-distribution propagation.
///
/// The registration gate uses the same product semantics as the recursion:
/// p_on(n) = s_on(n)·g(n) with g(n) read off the age distribution before
/// slot n. Ages at or above `age_cap` are lumped and given the full-bias
/// transition probability; if that lumping could shift a slot's probability
/// by more than [`AGE_CAP_LEAK`], an error is returned.
pub fn markov_exact(
    detector: &Detector,
    train: &PulseTrain,
    mode: GateMode,
    dark: DarkCounts,
    age_cap: usize,
) -> Result<ExactTrace> {
    let t = train.slot_period;
    let horizon = truncation_horizon(detector, t);
    let k_gate = gate_age(detector, t);
    if age_cap < horizon || age_cap < k_gate {
        return Err(Error::AgeCap {
            cap: age_cap,
            reason: format!("must be at least the truncation horizon {horizon} and gate age {k_gate}"),
        });
    }
    let hz = Hazards::new(detector, train, dark, age_cap + 1)?;
    let lump_error = (hz.full - hz.at(Some(age_cap + 1))).abs();

    let n = train.num_slots;
    let mut out = ExactTrace {
        s_off: Vec::with_capacity(n),
        s_on: Vec::with_capacity(n),
        g: Vec::with_capacity(n),
        p_on: Vec::with_capacity(n),
        max_mass_error: 0.0,
        final_state: AgeChainState::initial(age_cap),
    };
    let mut state = AgeChainState::initial(age_cap);
    let mut next = AgeChainState::initial(age_cap);

    for slot in 1..=n {
        let g = if slot == 1 {
            1.0
        } else {
            match mode {
                GateMode::PaperApprox => state.mass_at_least(1),
                GateMode::ExactAge if k_gate <= 1 => 1.0,
                GateMode::ExactAge => state.mass_at_least(k_gate - 1),
            }
        };

        let lumped = state.ages[age_cap];
        if lumped * lump_error > AGE_CAP_LEAK {
            return Err(Error::AgeCap {
                cap: age_cap,
                reason: format!("slot {slot}: mass {lumped:e} beyond the cap with hazard spread {lump_error:e}"),
            });
        }

        next.ages.iter_mut().for_each(|m| *m = 0.0);
        let q_never = hz.at(None);
        let mut fired = state.never * q_never;
        next.never = state.never * (1.0 - q_never);
        for (a, &mass) in state.ages.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let q = if a == age_cap { hz.full } else { hz.at(Some(a + 1)) };
            fired += mass * q;
            next.ages[(a + 1).min(age_cap)] += mass * (1.0 - q);
        }
        next.ages[0] = fired;
        std::mem::swap(&mut state, &mut next);

        let survived = state.mass_at_least(1);
        out.max_mass_error = out.max_mass_error.max((state.total_mass() - 1.0).abs());
        out.s_on.push(fired);
        out.s_off.push(survived);
        out.g.push(g);
        out.p_on.push(fired * g);
    }
    out.final_state = state;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub trials: u64,
    /// Empirical per-slot transition frequency.
    pub s_on: Vec<f64>,
    /// Empirical per-slot registered-click frequency (joint event).
    pub p_on: Vec<f64>,
    pub s_on_stderr: Vec<f64>,
    pub p_on_stderr: Vec<f64>,
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Seeded Monte Carlo of the slot process. Each trial walks the slots with
/// its own ChaCha stream keyed by (seed, trial index), so the result does
/// not depend on scheduling. A transition counts as a click when the pulse
/// age meets the gate criterion: [`gate_age`] for `ExactAge`, at least
/// two slots for `PaperApprox`.
pub fn simulate(
    detector: &Detector,
    train: &PulseTrain,
    mode: GateMode,
    dark: DarkCounts,
    trials: u64,
    seed: u64,
) -> Result<McResult> {
    if trials == 0 {
        return Err(Error::domain("trials", 0.0, ">= 1"));
    }
    let n = train.num_slots;
    let hz = Hazards::new(detector, train, dark, n)?;
    let min_age = match mode {
        GateMode::ExactAge => gate_age(detector, train.slot_period),
        GateMode::PaperApprox => 2,
    };

    let (fired, clicked) = (0..trials)
        .into_par_iter()
        .fold(
            || (vec![0u64; n], vec![0u64; n]),
            |(mut fired, mut clicked), trial| {
                let mut rng = trial_rng(seed, trial);
                // slots since the last transition, as seen by the next pulse
                let mut age: Option<usize> = None;
                for slot in 0..n {
                    let q = hz.at(age);
                    if rng.random::<f64>() < q {
                        fired[slot] += 1;
                        if age.is_none_or(|a| a >= min_age) {
                            clicked[slot] += 1;
                        }
                        age = Some(1);
                    } else {
                        age = age.map(|a| a + 1);
                    }
                }
                (fired, clicked)
            },
        )
        .reduce(
            || (vec![0u64; n], vec![0u64; n]),
            |(mut fa, mut ca), (fb, cb)| {
                fa.iter_mut().zip(fb).for_each(|(a, b)| *a += b);
                ca.iter_mut().zip(cb).for_each(|(a, b)| *a += b);
                (fa, ca)
            },
        );

    let tf = trials as f64;
    let freq = |c: &[u64]| c.iter().map(|&k| k as f64 / tf).collect::<Vec<_>>();
    let stderr = |p: &[f64]| p.iter().map(|&x| (x * (1.0 - x) / tf).sqrt()).collect::<Vec<_>>();
    let s_on = freq(&fired);
    let p_on = freq(&clicked);
    Ok(McResult {
        trials,
        s_on_stderr: stderr(&s_on),
        p_on_stderr: stderr(&p_on),
        s_on,
        p_on,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub max_abs_deviation: f64,
    /// Per-slot z-scores; empty when no standard errors were supplied.
    pub z: Vec<f64>,
    pub max_abs_z: f64,
    /// Fraction of slots with |z| ≤ 3 (1 when no z-scores).
    pub within_three_sigma: f64,
}

impl Comparison {
    pub fn passes(&self, max_deviation: f64, max_abs_z: f64) -> bool {
        self.max_abs_deviation <= max_deviation && self.max_abs_z <= max_abs_z
    }
}

/// Deviation statistics of `candidate` against `reference`. With `sigma`,
/// z = (candidate − reference)/σ per slot; a zero σ gives z = 0 on exact
/// agreement and ±∞ otherwise.
pub fn compare(reference: &[f64], candidate: &[f64], sigma: Option<&[f64]>) -> Result<Comparison> {
    if reference.len() != candidate.len() {
        return Err(Error::LengthMismatch {
            left: reference.len(),
            right: candidate.len(),
        });
    }
    let max_abs_deviation = reference
        .iter()
        .zip(candidate)
        .map(|(r, c)| (r - c).abs())
        .fold(0.0, f64::max);
    let z: Vec<f64> = match sigma {
        None => Vec::new(),
        Some(s) => {
            if s.len() != reference.len() {
                return Err(Error::LengthMismatch {
                    left: reference.len(),
                    right: s.len(),
                });
            }
            reference
                .iter()
                .zip(candidate)
                .zip(s)
                .map(|((r, c), &sd)| {
                    let d = c - r;
                    if sd > 0.0 {
                        d / sd
                    } else if d == 0.0 {
                        0.0
                    } else {
                        d.signum() * f64::INFINITY
                    }
                })
                .collect()
        }
    };
    let max_abs_z = z.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let within_three_sigma = if z.is_empty() {
        1.0
    } else {
        z.iter().filter(|v| v.abs() <= 3.0).count() as f64 / z.len() as f64
    };
    Ok(Comparison {
        max_abs_deviation,
        z,
        max_abs_z,
        within_three_sigma,
    })
}

/// Recursion vs exact chain on s_on.
pub fn compare_exact(trace: &TraceResult, exact: &ExactTrace) -> Result<Comparison> {
    let on = compare(&exact.s_on, &trace.s_on, None)?;
    let click = compare(&exact.p_on, &trace.p_on, None)?;
    Ok(Comparison {
        max_abs_deviation: on.max_abs_deviation.max(click.max_abs_deviation),
        ..on
    })
}

/// Monte Carlo s_on vs exact probabilities, with binomial σ from the exact
/// values.
pub fn compare_mc(exact_s_on: &[f64], mc: &McResult) -> Result<Comparison> {
    let tf = mc.trials as f64;
    let sigma: Vec<f64> = exact_s_on.iter().map(|&p| (p * (1.0 - p) / tf).sqrt()).collect();
    compare(exact_s_on, &mc.s_on, Some(&sigma))
}
