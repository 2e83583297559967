use std::fs;
use std::process::{Command, Output};

fn sspd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sspd")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
}

#[test]
fn recover_prints_time_constant_and_threshold_recovery() {
    let o = sspd(&["recover", "--detector", "ch5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(value(&text, "tau_ns"), "44.800");
    let t72: f64 = value(&text, "recovery_to_72pct_ns").parse().unwrap();
    assert!((t72 - 57.0).abs() < 0.05);
    assert!(text.starts_with("# sspd-core "));
}

#[test]
fn detector_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ch2.json");
    fs::write(
        &path,
        r#"{"name":"CH2","critical_current":12.2e-6,"kinetic_inductance":2.13e-6,
            "operating_bias":11.0532e-6,"discriminator_threshold":3.910391e-3,
            "base_efficiency":0.117,"dark_count_rate":100}"#,
    )
    .unwrap();
    let o = sspd(&["recover", "--detector", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(value(&stdout(&o), "tau_ns"), "85.200");
}

#[test]
fn sweep_output_is_reproducible_and_self_describing() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = sspd(&["sweep", "--power-dbm=-60:-25:0.5", "--out", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (text, tb) = (fs::read_to_string(&a).unwrap(), fs::read_to_string(&b).unwrap());
    assert_eq!(text, tb);
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# sspd-core 0."));
    assert_eq!(lines.next().unwrap(), "# command: sweep");
    let config = lines.next().unwrap();
    assert!(config.contains("\"power_dbm\":\"-60:-25:0.5\"") && config.contains("\"kinetic_inductance\":1.12e-6"));
    assert_eq!(
        lines.next().unwrap(),
        "power_dbm,photons_per_pulse,model_rate_hz,observed_rate_hz"
    );
    assert_eq!(lines.count(), 71);
}

#[test]
fn validate_passes_and_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("v.csv");
    let o = sspd(&[
        "validate",
        "--slots",
        "100",
        "--trials",
        "100000",
        "--seed",
        "7",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(value(&stdout(&o), "result"), "pass");
    let table = fs::read_to_string(&csv).unwrap();
    assert!(table.lines().any(|l| l == "slot,recursion,exact,mc,mc_stderr,z"));
    assert_eq!(table.lines().filter(|l| !l.starts_with('#')).count(), 101);

    let again = sspd(&["validate", "--slots", "100", "--trials", "100000", "--seed", "7"]);
    assert_eq!(stdout(&again), stdout(&o));
}

#[test]
fn validate_failure_exits_nonzero() {
    // a cap below the horizon cannot run
    let o = sspd(&["validate", "--age-cap", "3"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("error: kind=age_cap"), "{}", stderr(&o));
}

#[test]
fn blind_force_coincidence_reports() {
    let o = sspd(&["blind"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = stdout(&o);
    assert_eq!(value(&t, "blinding_period_ns"), "57.144");
    assert!(value(&t, "min_blinding_power_dbm").parse::<f64>().is_ok());

    let o = sspd(&["force"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(value(&stdout(&o), "p1"), "0.894000");

    let o = sspd(&["coincidence", "--baseline", "implied"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(value(&stdout(&o), "blinding_interval_slots"), "58");
}

#[test]
fn blind_trace_appendix() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trace.csv");
    let o = sspd(&["blind", "--slots", "20", "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(&csv).unwrap();
    assert!(table.contains("\nslot,s_off,s_on,g,p_on\n"));
    assert_eq!(table.lines().filter(|l| !l.starts_with('#')).count(), 21);
}

#[test]
fn errors_are_machine_readable() {
    let cases: [(&[&str], &str); 6] = [
        (&["coincidence"], "config"),
        (&["coincidence", "--baseline", "0"], "domain"),
        (&["sweep", "--power-dbm=-20:-30:1"], "config"),
        (&["recover", "--detector", "nope"], "config"),
        (&["validate", "--slots", "0"], "config"),
        (&["blind", "--escape", "2"], "domain"),
    ];
    for (args, kind) in cases {
        let o = sspd(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err = stderr(&o);
        let line = err.lines().last().unwrap();
        assert!(
            line.starts_with(&format!("error: kind={kind} message=\"")),
            "{args:?}: {line}"
        );
    }
}

#[test]
fn usage_errors() {
    for args in [&["frobnicate"][..], &["sweep", "--bogus"], &[]] {
        let o = sspd(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).lines().last().unwrap().starts_with("error: kind=usage"));
    }
}

#[test]
fn bad_detector_file_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    fs::write(
        &path,
        r#"{"name":"x","critical_current":24.5e-6,"kinetic_inductance":1.12e-6,
            "base_efficiency":0.18,"dark_count_rate":100,"gain":3}"#,
    )
    .unwrap();
    let o = sspd(&["recover", "--detector", path.to_str().unwrap()]);
    let err = stderr(&o);
    assert!(err.contains("kind=json") && err.contains("gain"), "{err}");
}
