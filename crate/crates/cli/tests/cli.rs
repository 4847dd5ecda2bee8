use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn emitternet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emitternet"))
        .args(args)
        .env_remove("EMITTERNET_SEED")
        .output()
        .expect("spawn binary")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    assert_eq!(text.trim().lines().count(), 1, "single-line error: {text}");
    serde_json::from_str(text.trim()).expect("stderr is JSON")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn birthday_reports_thirteen() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_stdout(&emitternet(&["birthday", "--q", "0.0098", "--target", "0.5", "--out", path(dir.path())]));
    assert_eq!(v["n_star"], 13);
    assert_eq!(v["q_source"], "given");
    let on_disk: Value = serde_json::from_slice(&fs::read(dir.path().join("birthday.json")).unwrap()).unwrap();
    assert_eq!(on_disk["n_star"], 13);
    assert_eq!(on_disk["config_hash"], v["config_hash"]);
}

#[test]
fn lossless_protocol_is_ideal() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_stdout(&emitternet(&["protocol", "--n", "4", "--eta", "1.0", "--out", path(dir.path())]));
    assert_eq!(v["fidelity"], 1.0);
    assert!((v["fidelity_enumeration"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let amps = v["ghz_amplitudes"].as_array().unwrap();
    assert_eq!(amps.len(), 2);
    for a in amps {
        assert!((a["re"].as_f64().unwrap().abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }
}

#[test]
fn csv_outputs_carry_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_stdout(&emitternet(&["sample", "--n", "20", "--out", path(dir.path())]));
    let hash = v["config_hash"].as_str().unwrap();
    for name in v["outputs"].as_array().unwrap() {
        let text = fs::read_to_string(dir.path().join(name.as_str().unwrap())).unwrap();
        assert!(text.contains(hash), "{name} lacks the config hash");
    }
    // the exported line list reads back through the strict parser
    let lines = fs::read(dir.path().join("sample_lines.csv")).unwrap();
    assert_eq!(emitternet::io::parse_line_list(&lines).unwrap().len(), 20);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_emitternet"))
        .args(["sample", "--out", path(dir.path())])
        .env("EMITTERNET_SEED", "99")
        .output()
        .unwrap();
    let v = json_stdout(&out);
    assert_eq!(v["seed"], 99);
    assert_eq!(v["seed_source"], "environment");

    let flag = json_stdout(&Command::new(env!("CARGO_BIN_EXE_emitternet"))
        .args(["sample", "--seed", "5", "--out", path(dir.path())])
        .env("EMITTERNET_SEED", "99")
        .output()
        .unwrap());
    assert_eq!(flag["seed"], 5);
    assert_eq!(flag["seed_source"], "flag");
}

#[test]
fn usage_errors_exit_one() {
    for args in [&["bogus"][..], &["protocol", "--trials", "10"], &["birthday", "--q", "abc"]] {
        let out = emitternet(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert_eq!(stderr_json(&out)["error"], "usage");
    }
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "emitter_id,f_a1_ghz,f_a2_ghz,fwhm_a1_mhz,fwhm_a2_mhz\nok,0,1,300,300\nflip9,2.0,1.5,300,300\n").unwrap();
    let out = emitternet(&["overlap", "--input", path(&bad), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "validation");
    assert!(err["message"].as_str().unwrap().contains("flip9"));

    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"overlap": {"windw_mhz": 29}}"#).unwrap();
    let out = emitternet(&["sample", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));

    let out = emitternet(&["spatial", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2), "lateral resolution is mandatory");

    let empty = tempfile::tempdir().unwrap();
    let out = emitternet(&["report", "--out", path(empty.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_birthday_report_echoes_n_star() {
    let dir = tempfile::tempdir().unwrap();
    json_stdout(&emitternet(&["birthday", "--q", "0.0098", "--out", path(dir.path())]));
    let r = json_stdout(&emitternet(&["report", "--out", path(dir.path())]));
    assert_eq!(r["sections"]["birthday"]["n_star"], 13);
    assert!(r["data_note"].as_str().unwrap().contains("constructed fixtures"));
    let text = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(text.contains("n*: 13"));
}

#[test]
fn full_pipeline_report_has_every_section() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    json_stdout(&emitternet(&["sample", "--out", out]));
    json_stdout(&emitternet(&["overlap", "--trials", "200", "--out", out]));
    json_stdout(&emitternet(&["birthday", "--out", out]));
    json_stdout(&emitternet(&["fit-ple", "--out", out]));
    json_stdout(&emitternet(&["protocol", "--out", out]));
    json_stdout(&emitternet(&["spatial", "--lateral-fwhm-um", "0.5", "--trials", "20000", "--out", out]));
    let r = json_stdout(&emitternet(&["report", "--out", out]));
    for s in ["sample", "overlap", "birthday", "fit-ple", "protocol", "spatial"] {
        let section = &r["sections"][s];
        assert!(section.is_object(), "missing {s}");
        assert!(section.get("generated_at").is_none());
        assert_eq!(r["provenance"][s]["config_hash"], section["config_hash"]);
    }
    assert_eq!(r["missing_sections"].as_array().unwrap().len(), 0);
}

#[test]
fn fit_ple_reads_spectrum_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let side = dir.path().join("s.json");
    let mut text = String::from("frequency_ghz,counts\n");
    for i in 0..401 {
        let x = -2.0 + 0.01 * i as f64;
        let y = 5.0 + 100.0 * 0.0256 / ((x - 0.3) * (x - 0.3) + 0.0256);
        text.push_str(&format!("{x},{y}\n"));
    }
    fs::write(&csv, text).unwrap();
    fs::write(&side, r#"{"dwell_time_s": 0.2}"#).unwrap();
    let v = json_stdout(&emitternet(&[
        "fit-ple", "--input", path(&csv), "--sidecar", path(&side), "--k", "1", "--out", path(dir.path()),
    ]));
    assert_eq!(v["dwell_time_s"], 0.2);
    assert_eq!(v["converged"], true);
    let c = v["peaks"][0]["center_ghz"].as_f64().unwrap();
    assert!((c - 0.3).abs() < 1e-6, "{c}");
    assert!((v["peaks"][0]["fwhm_mhz"].as_f64().unwrap() - 320.0).abs() < 1e-3);
}

#[test]
fn example_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schema/example_config.json");
    let v = json_stdout(&emitternet(&["birthday", "--config", cfg, "--out", path(dir.path())]));
    assert_eq!(v["seed"], 20240501);
    assert_eq!(v["seed_source"], "config");
    assert!(v["monte_carlo"]["n_star"].as_u64().unwrap() > 1);
}
