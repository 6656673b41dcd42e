use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{
  "seed": 3,
  "arrays": {"ris_elements": 64, "radar_elements": 64},
  "detector": {"false_alarm_target": 0.01, "calibration_trials": 20000},
  "radar": {"pulses_per_cpi": [8], "rcs_m2": [0.1, 10], "trials": 300},
  "comm": {"rates": [{"slot_pulses": 4, "slot_bits": 1}], "snr_db": [0, 10], "slots": 500}
}"#;

fn starisac(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starisac"))
        .args(args)
        .current_dir(dir)
        .env_remove("STARISAC_JOBS")
        .output()
        .unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.json"), SMALL).unwrap();
    dir
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn calibrate_radar_ber_plot_pipeline() {
    let dir = setup();
    let d = dir.path();
    let o = starisac(&["calibrate", "--config", "small.json", "--out", "out"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let artifacts: Vec<_> = std::fs::read_dir(d.join("out")).unwrap().collect();
    assert_eq!(artifacts.len(), 2);

    let o = starisac(&["radar", "--config", "small.json", "--out", "out"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = std::fs::read_to_string(d.join("out/radar.manifest.json")).unwrap();
    assert!(manifest.contains("\"fa_counting\": \"event\""));
    assert!(manifest.contains("\"penalty\""));

    let o = starisac(&["ber", "--config", "small.json", "--out", "out", "--trials", "300"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.join("out/ber.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    assert!(csv.lines().nth(1).unwrap().ends_with(",300,3"));

    let o = starisac(&["plot", "out/radar.csv", "out/ber.csv", "--out", "figs"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["ber_vs_snr.svg", "pd_vs_rcs.svg", "rmse_vs_rcs.svg"] {
        let svg = std::fs::read_to_string(d.join("figs").join(f)).unwrap();
        assert!(svg.starts_with("<svg"));
    }
}

#[test]
fn output_is_independent_of_jobs() {
    let dir = setup();
    let d = dir.path();
    let args = |out: &'static str, jobs: &'static str| {
        vec!["radar", "--config", "small.json", "--no-comm", "--out", out, "--calibration", "cal", "--jobs", jobs]
    };
    assert!(starisac(&["calibrate", "--config", "small.json", "--no-comm", "--out", "cal"], d).status.success());
    assert!(starisac(&args("a", "1"), d).status.success());
    assert!(starisac(&args("b", "3"), d).status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_starisac"))
        .args(args("c", "1"))
        .current_dir(d)
        .env("STARISAC_JOBS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let a = std::fs::read(d.join("a/radar.csv")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b/radar.csv")).unwrap());
    assert_eq!(a, std::fs::read(d.join("c/radar.csv")).unwrap());
}

#[test]
fn config_errors_exit_2_with_field_path() {
    let dir = setup();
    let d = dir.path();
    std::fs::write(d.join("bad.json"), r#"{"radar": {"pulses_per_cpi": [12]}}"#).unwrap();
    let o = starisac(&["ber", "--config", "bad.json", "--out", "out"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("radar.pulses_per_cpi[0]"), "{}", stderr(&o));

    std::fs::write(d.join("bad.json"), r#"{"system": {"pri_ms": -1}}"#).unwrap();
    assert_eq!(starisac(&["ber", "--config", "bad.json"], d).status.code(), Some(2));
    assert_eq!(starisac(&["ber", "--bogus"], d).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_starisac"))
        .args(["ber", "--config", "small.json", "--trials", "10"])
        .current_dir(d)
        .env("STARISAC_JOBS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn calibration_failures_exit_3() {
    let dir = setup();
    let d = dir.path();
    // radar needs artifacts that were never written
    let o = starisac(&["radar", "--config", "small.json", "--out", "empty"], d);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    // too few trials to resolve the target rate
    let o = starisac(&["calibrate", "--config", "small.json", "--trials", "500", "--out", "cal"], d);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn io_failures_exit_4() {
    let dir = setup();
    let d = dir.path();
    std::fs::write(d.join("blocker"), "").unwrap();
    let o = starisac(&["ber", "--config", "small.json", "--trials", "20", "--out", "blocker/out"], d);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));

    std::fs::write(d.join("empty.csv"), "").unwrap();
    let o = starisac(&["plot", "empty.csv", "--out", "figs"], d);
    assert_eq!(o.status.code(), Some(4));
    assert!(!d.join("figs").exists());
}
