//! Command-line surface. The `sspd` binary parses arguments with [`Cli`]
//! and hands the subcommand to [`run`].

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Serialize, Serializer};

use crate::attack::{
    blinding_schedule, coincidence_countermeasure, double_pulse_port_control, forcing_photons_for, min_blinding_power,
    BlindingSearch, BASELINE_COINCIDENCE_PER_SLOT,
};
use crate::device::Detector;
use crate::error::{Error, Result};
use crate::io::{self, DetectorEcho, PowerRange, Report, ValidateRow};
use crate::oracle::{compare, compare_mc, default_age_cap, markov_exact, simulate};
use crate::pulse_train::{
    evolve, evolve_with, power_sweep, DarkCounts, EvolveOptions, GateMode, PulseTrain, Saturation, SteadyStateOptions,
    SweepConfig,
};
use crate::units::DEFAULT_WAVELENGTH;

/// Oracle agreement required by `validate`.
pub const VALIDATE_MAX_DEVIATION: f64 = 1e-9;
pub const VALIDATE_MIN_WITHIN_3_SIGMA: f64 = 0.95;

#[derive(Debug, Parser)]
#[command(name = "sspd", version, about = "SSPD pulse-train response and blinding analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Bias recovery time constant and threshold recovery time.
    Recover(RunConfig),
    /// Steady-state count rate over a power range, as CSV.
    Sweep(RunConfig),
    /// Tailored blinding schedule and minimum blinding power.
    Blind(RunConfig),
    /// Double-pulse forcing of the unblinded port.
    Force(RunConfig),
    /// Coincidence-monitor estimate against a baseline.
    Coincidence(RunConfig),
    /// Recursion vs exact Markov chain vs Monte Carlo.
    Validate(RunConfig),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Recover(_) => "recover",
            Command::Sweep(_) => "sweep",
            Command::Blind(_) => "blind",
            Command::Force(_) => "force",
            Command::Coincidence(_) => "coincidence",
            Command::Validate(_) => "validate",
        }
    }

    pub fn config(&self) -> &RunConfig {
        match self {
            Command::Recover(c)
            | Command::Sweep(c)
            | Command::Blind(c)
            | Command::Force(c)
            | Command::Coincidence(c)
            | Command::Validate(c) => c,
        }
    }
}

fn display<T: std::fmt::Display, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// All run options. Every subcommand accepts the full set and echoes it,
/// defaults included, in its output header. Output destinations are not
/// echoed, so identical runs produce identical bytes wherever they land.
#[derive(Debug, Clone, Args, Serialize)]
pub struct RunConfig {
    /// Detector JSON file or bundled preset name (ch2, ch4, ch5, ch6).
    #[arg(long, default_value = "ch5")]
    pub detector: String,
    /// Detector forced to click in `force` / `coincidence`.
    #[arg(long, default_value = "ch2")]
    pub forced: String,
    /// Efficiency-curve CSV overriding the detector's own curve.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long = "rep-rate-hz", default_value_t = 1e9)]
    pub rep_rate_hz: f64,
    #[arg(long = "wavelength-m", default_value_t = DEFAULT_WAVELENGTH)]
    pub wavelength_m: f64,
    /// start:stop:step in dBm.
    #[arg(long = "power-dbm", default_value = "-60:-25:0.5")]
    pub power_dbm: String,
    /// Slots for traces and `validate`.
    #[arg(long, default_value_t = 100)]
    pub slots: usize,
    /// Monte Carlo trials for `validate`.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Mean photons per pulse for `validate`.
    #[arg(long, default_value_t = 8.0)]
    pub photons: f64,
    /// Markov age cap for `validate` (default: enough for exactness).
    #[arg(long = "age-cap")]
    pub age_cap: Option<usize>,
    #[arg(long, default_value_t = GateMode::ExactAge)]
    #[serde(serialize_with = "display")]
    pub mode: GateMode,
    #[arg(long, default_value_t = Saturation::Hard)]
    #[serde(serialize_with = "display")]
    pub saturation: Saturation,
    #[arg(long = "r-max-hz", default_value_t = crate::pulse_train::DEFAULT_R_MAX)]
    pub r_max_hz: f64,
    #[arg(long = "rel-tol", default_value_t = crate::pulse_train::DEFAULT_REL_TOL)]
    pub rel_tol: f64,
    #[arg(long = "max-slots", default_value_t = crate::pulse_train::DEFAULT_MAX_SLOTS)]
    pub max_slots: usize,
    /// Allowed escape probability per blinding pulse.
    #[arg(long, default_value_t = crate::attack::DEFAULT_ESCAPE)]
    pub escape: f64,
    /// Count rate regarded as blinded, c/s.
    #[arg(long = "max-count-rate", default_value_t = crate::attack::DEFAULT_MAX_COUNT_RATE)]
    pub max_count_rate: f64,
    #[arg(long = "bracket-lo-dbm", default_value_t = -90.0, allow_hyphen_values = true)]
    pub bracket_lo_dbm: f64,
    #[arg(long = "bracket-hi-dbm", default_value_t = 10.0, allow_hyphen_values = true)]
    pub bracket_hi_dbm: f64,
    /// Target single-pulse click probability of the forced detector.
    #[arg(long, default_value_t = 0.894)]
    pub p1: f64,
    /// Forcing photons per pulse; overrides the back-solve from --p1.
    #[arg(long = "forcing-photons")]
    pub forcing_photons: Option<f64>,
    /// Normal-operation coincidence probability per slot, or `implied`
    /// for the back-computed 3.5e-5/29000. Required by `coincidence`.
    #[arg(long)]
    pub baseline: Option<String>,
    /// Report / CSV destination (default stdout).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Optional CSV appendix with the underlying per-slot table.
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Cli::parse_from(["sspd", "recover"]).command.config().clone()
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rep_rate_hz > 0.0 && self.rep_rate_hz.is_finite()) {
            return Err(Error::config("rep_rate_hz", self.rep_rate_hz, "must be finite and > 0"));
        }
        if !(self.wavelength_m > 0.0 && self.wavelength_m.is_finite()) {
            return Err(Error::config(
                "wavelength_m",
                self.wavelength_m,
                "must be finite and > 0",
            ));
        }
        self.power_range()?;
        if self.slots < 1 {
            return Err(Error::config("slots", self.slots, "must be >= 1"));
        }
        if self.trials < 1 {
            return Err(Error::config("trials", self.trials, "must be >= 1"));
        }
        if !(self.photons >= 0.0 && self.photons.is_finite()) {
            return Err(Error::config("photons", self.photons, "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn power_range(&self) -> Result<PowerRange> {
        PowerRange::parse(&self.power_dbm)
    }

    pub fn slot_period(&self) -> f64 {
        1.0 / self.rep_rate_hz
    }

    fn steady(&self) -> SteadyStateOptions {
        SteadyStateOptions {
            mode: self.mode,
            rel_tol: self.rel_tol,
            max_slots: self.max_slots,
            dark: DarkCounts::Constant,
        }
    }

    fn baseline(&self) -> Result<f64> {
        match self.baseline.as_deref() {
            None => Err(Error::config(
                "baseline",
                "none",
                "coincidence needs --baseline <per-slot value | implied>",
            )),
            Some("implied") => Ok(BASELINE_COINCIDENCE_PER_SLOT),
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| Error::config("baseline", s, "expected a number or `implied`")),
        }
    }
}

#[derive(Serialize)]
struct Echo<'a> {
    run: &'a RunConfig,
    detector: DetectorEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    forced: Option<DetectorEcho>,
}

/// Runs one subcommand, writing its report to `--out` or else `stdout`.
pub fn run(command: &Command, stdout: &mut dyn Write) -> Result<()> {
    let cfg = command.config();
    cfg.validate()?;
    let detector = io::resolve_detector(&cfg.detector, cfg.curve.as_deref())?;
    let forced = match command {
        Command::Force(_) | Command::Coincidence(_) => Some(io::resolve_detector(&cfg.forced, None)?),
        _ => None,
    };
    let echo = Echo {
        run: cfg,
        detector: (&detector).into(),
        forced: forced.as_ref().map(Into::into),
    };

    let mut buf = Vec::new();
    io::write_header(&mut buf, command.name(), &echo)?;
    match command {
        Command::Recover(_) => recover(&detector, &mut buf)?,
        Command::Sweep(_) => sweep(cfg, &detector, &mut buf)?,
        Command::Blind(_) => blind(cfg, &echo, &detector, &mut buf)?,
        Command::Force(_) => force(cfg, &detector, forced.as_ref().unwrap(), &mut buf)?,
        Command::Coincidence(_) => coincidence(cfg, &detector, forced.as_ref().unwrap(), &mut buf)?,
        Command::Validate(_) => validate(cfg, &echo, &detector, &mut buf)?,
    }
    match &cfg.out {
        Some(path) => fs::write(path, &buf).map_err(|e| Error::File {
            path: path.clone(),
            source: Box::new(e.into()),
        }),
        None => Ok(stdout.write_all(&buf)?),
    }
}

fn recover(d: &Detector, out: &mut Vec<u8>) -> Result<()> {
    let p = &d.params;
    let ns = |t: f64| format!("{:.3}", t * 1e9);
    Report::new(out)
        .kv("detector", p.name())?
        .kv("tau_ns", ns(p.recovery_time_constant()))?
        .kv("recovery_to_72pct_ns", ns(p.time_to_bias_fraction(0.72)?))?
        .kv("threshold_bias_fraction", format!("{:.6}", p.threshold_bias_fraction()))?
        .kv("threshold_recovery_ns", ns(p.threshold_recovery_time()))?
        .kv(
            "efficiency_at_threshold",
            format!("{:.6e}", d.efficiency_at_threshold()?),
        )?;
    Ok(())
}

fn sweep(cfg: &RunConfig, d: &Detector, out: &mut Vec<u8>) -> Result<()> {
    let sc = SweepConfig {
        rep_rate: cfg.rep_rate_hz,
        wavelength: cfg.wavelength_m,
        powers_dbm: cfg.power_range()?.points(),
        r_max: cfg.r_max_hz,
        saturation: cfg.saturation,
        steady: cfg.steady(),
    };
    let rows = power_sweep(d, &sc)?;
    io::write_sweep_csv(out, &rows)
}

fn blind<C: Serialize>(cfg: &RunConfig, echo: &C, d: &Detector, out: &mut Vec<u8>) -> Result<()> {
    let plan = blinding_schedule(d, cfg.escape)?;
    let search = BlindingSearch {
        bracket_dbm: (cfg.bracket_lo_dbm, cfg.bracket_hi_dbm),
        wavelength: cfg.wavelength_m,
        steady: cfg.steady(),
        ..BlindingSearch::default()
    };
    let power = min_blinding_power(d, cfg.rep_rate_hz, cfg.max_count_rate, &search)?;
    let mut r = Report::new(out);
    r.kv("target", &plan.target)?
        .kv("blinding_period_ns", format!("{:.3}", plan.blinding_period * 1e9))?
        .kv("photons_per_blinding_pulse", plan.photons_per_blinding_pulse)?
        .kv("retrip_probability", format!("{:.9}", plan.retrip_probability))?
        .kv(
            "blinding_power_w",
            format!("{:.6e}", plan.blinding_power(cfg.wavelength_m)),
        )?
        .kv(
            "dps_power_2_detectors_w",
            format!(
                "{:.6e}",
                crate::attack::dps_double_pulse_power(&plan, 2, cfg.wavelength_m)
            ),
        )?
        .kv("min_blinding_power_dbm", format!("{:.2}", power.dbm))?
        .kv("min_blinding_power_w", format!("{:.6e}", power.watts))?
        .kv(
            "min_blinding_photons_per_pulse",
            format!("{:.1}", power.photons_per_pulse),
        )?
        .kv("rate_at_min_power_hz", format!("{:.6e}", power.rate))?
        .kv(
            "search_bracket_dbm",
            format!("{}:{}", power.bracket_dbm.0, power.bracket_dbm.1),
        )?;
    if let Some(w) = &power.warning {
        r.kv("warning", w)?;
    }
    if let Some(path) = &cfg.csv {
        let train = PulseTrain::new(plan.photons_per_blinding_pulse, plan.blinding_period, cfg.slots)?;
        let trace = evolve_with(d, &train, &EvolveOptions::mode(cfg.mode))?;
        io::write_csv_file(path, "blind", echo, |b| io::write_trace_csv(b, &trace))?;
    }
    Ok(())
}

fn forcing_plan(cfg: &RunConfig, blinded: &Detector, forced: &Detector) -> Result<crate::attack::AttackPlan> {
    let photons = match cfg.forcing_photons {
        Some(n) => n,
        None => forcing_photons_for(cfg.p1, forced.params.base_efficiency())?,
    };
    Ok(blinding_schedule(blinded, cfg.escape)?.with_forcing(photons))
}

fn force(cfg: &RunConfig, blinded: &Detector, forced: &Detector, out: &mut Vec<u8>) -> Result<()> {
    let plan = forcing_plan(cfg, blinded, forced)?;
    let r = double_pulse_port_control(blinded, forced, &plan)?;
    Report::new(out)
        .kv("blinded", blinded.params.name())?
        .kv("forced", forced.params.name())?
        .kv(
            "forcing_photons_per_pulse",
            format!("{:.4}", r.forcing_photons_per_pulse),
        )?
        .kv("p1", format!("{:.6}", r.p1))?
        .kv("p2", format!("{:.6}", r.p2))?
        .kv("cumulative", format!("{:.6}", r.cumulative))?
        .kv(
            "blinded_no_transition_first",
            format!("{:.6}", r.blinded_no_transition_first),
        )?
        .kv("blinded_click_second", format!("{:.6e}", r.blinded_click_second))?
        .kv("blinding_escape", format!("{:.6e}", r.blinding_escape))?;
    Ok(())
}

fn coincidence(cfg: &RunConfig, blinded: &Detector, forced: &Detector, out: &mut Vec<u8>) -> Result<()> {
    let baseline = cfg.baseline()?;
    let plan = forcing_plan(cfg, blinded, forced)?;
    let r = coincidence_countermeasure(blinded, forced, &plan, baseline)?;
    Report::new(out)
        .kv("blinded", blinded.params.name())?
        .kv("forced", forced.params.name())?
        .kv(
            "forcing_photons_per_pulse",
            format!("{:.4}", plan.forcing_photons_per_pulse.unwrap_or(0.0)),
        )?
        .kv("blinding_interval_slots", r.blinding_interval_slots)?
        .kv("forced_second_only", format!("{:.6}", r.forced_second_only))?
        .kv("per_event_exact_age", format!("{:.6e}", r.per_event_exact))?
        .kv("per_event_paper_approx", format!("{:.6e}", r.per_event_paper_approx))?
        .kv("normalized_exact_age", format!("{:.6e}", r.normalized_exact))?
        .kv("normalized_paper_approx", format!("{:.6e}", r.normalized_paper_approx))?
        .kv("baseline_per_slot", format!("{:.6e}", r.baseline))?
        .kv("ratio_exact_age", format!("{:.1}", r.ratio_exact))?
        .kv("ratio_paper_approx", format!("{:.1}", r.ratio_paper_approx))?;
    Ok(())
}

fn validate<C: Serialize>(cfg: &RunConfig, echo: &C, d: &Detector, out: &mut Vec<u8>) -> Result<()> {
    let t = cfg.slot_period();
    let train = PulseTrain::new(cfg.photons, t, cfg.slots)?;
    let cap = cfg.age_cap.unwrap_or_else(|| default_age_cap(d, t).max(cfg.slots));
    let trace = evolve(d, &train, cfg.mode)?;
    let exact = markov_exact(d, &train, cfg.mode, DarkCounts::Constant, cap)?;
    let mc = simulate(d, &train, cfg.mode, DarkCounts::Constant, cfg.trials, cfg.seed)?;

    let rec_vs_exact = compare(&exact.s_on, &trace.s_on, None)?;
    let click_vs_exact = compare(&exact.p_on, &trace.p_on, None)?;
    let mc_vs_exact = compare_mc(&exact.s_on, &mc)?;
    let deviation = rec_vs_exact.max_abs_deviation.max(click_vs_exact.max_abs_deviation);
    let pass = deviation <= VALIDATE_MAX_DEVIATION && mc_vs_exact.within_three_sigma >= VALIDATE_MIN_WITHIN_3_SIGMA;

    Report::new(out)
        .kv("slots", cfg.slots)?
        .kv("trials", cfg.trials)?
        .kv("seed", cfg.seed)?
        .kv("age_cap", cap)?
        .kv("recursion_vs_exact_max_abs_dev", format!("{deviation:.3e}"))?
        .kv("exact_max_mass_error", format!("{:.3e}", exact.max_mass_error))?
        .kv(
            "mc_vs_exact_max_abs_dev",
            format!("{:.3e}", mc_vs_exact.max_abs_deviation),
        )?
        .kv("mc_vs_exact_max_abs_z", format!("{:.3}", mc_vs_exact.max_abs_z))?
        .kv("mc_within_3_sigma", format!("{:.4}", mc_vs_exact.within_three_sigma))?
        .kv("result", if pass { "pass" } else { "fail" })?;

    if let Some(path) = &cfg.csv {
        let rows: Vec<ValidateRow> = (0..cfg.slots)
            .map(|i| ValidateRow {
                recursion: trace.s_on[i],
                exact: exact.s_on[i],
                mc: mc.s_on[i],
                mc_stderr: mc.s_on_stderr[i],
                z: mc_vs_exact.z[i],
            })
            .collect();
        io::write_csv_file(path, "validate", echo, |b| io::write_validate_csv(b, &rows))?;
    }
    if !pass {
        return Err(Error::Validation(format!(
            "recursion deviation {deviation:e} (limit {VALIDATE_MAX_DEVIATION:e}), \
             {:.2}% of slots within 3 sigma (need {:.0}%)",
            100.0 * mc_vs_exact.within_three_sigma,
            100.0 * VALIDATE_MIN_WITHIN_3_SIGMA
        )));
    }
    Ok(())
}

/// `error: kind=<kind> message=<json string>` for scripts.
pub fn error_line(e: &Error) -> String {
    format!(
        "error: kind={} message={}",
        e.kind(),
        serde_json::to_string(&e.to_string()).unwrap_or_default()
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        Cli::try_parse_from(std::iter::once("sspd").chain(args.iter().copied()))
            .unwrap()
            .command
    }

    #[test]
    fn defaults_validate() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.mode, GateMode::ExactAge);
        assert_eq!(c.power_range().unwrap().points().len(), 71);
    }

    #[test]
    fn invariants_rejected() {
        for args in [
            &["sweep", "--power-dbm=-20:-30:1"][..],
            &["sweep", "--power-dbm=-30:-20:0"],
            &["validate", "--slots", "0"],
            &["validate", "--trials", "0"],
            &["recover", "--rep-rate-hz", "0"],
        ] {
            assert!(parse(args).config().validate().is_err(), "{args:?}");
        }
    }

    #[test]
    fn baseline_forms() {
        assert_eq!(
            parse(&["coincidence", "--baseline", "implied"])
                .config()
                .baseline()
                .unwrap(),
            BASELINE_COINCIDENCE_PER_SLOT
        );
        assert_eq!(
            parse(&["coincidence", "--baseline", "2e-9"])
                .config()
                .baseline()
                .unwrap(),
            2e-9
        );
        assert!(parse(&["coincidence", "--baseline", "lots"])
            .config()
            .baseline()
            .is_err());
        assert!(parse(&["coincidence"]).config().baseline().is_err());
    }

    #[test]
    fn run_writes_header_then_report() {
        let mut buf = Vec::new();
        run(&parse(&["recover", "--detector", "ch2"]), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# sspd-core"));
        assert!(lines[2].starts_with("# config: {\"run\":{\"detector\":\"ch2\""));
        assert!(text.contains("\nthreshold_recovery_ns = 13.000\n"));
    }

    #[test]
    fn error_line_is_quoted() {
        let e = Error::Search("a \"b\"".into());
        assert_eq!(error_line(&e), r#"error: kind=search message="search failed: a \"b\"""#);
    }
}
