use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rdseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdseg")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn synth(dir: &Path, scene: &str, frames: &str) -> Output {
    let s = dir.join("scene.json");
    std::fs::write(&s, scene).unwrap();
    rdseg(&["synth", "--scene", &path(&s), "--frames", frames, "--out", &path(&dir.join("synth"))])
}

#[test]
fn missing_input_is_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rdseg(&["detect", "--out", &path(tmp.path()), &path(&tmp.path().join("absent.rdm"))]);
    assert_eq!(out.status.code(), Some(3));
    let out = rdseg(&["eval", "--config", &path(&tmp.path().join("absent.json"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn schema_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"detect": {"detector": {"threshold": 5.5, "extra": 1}}}"#).unwrap();
    assert_eq!(rdseg(&["detect", "--config", &path(&bad)]).status.code(), Some(2));
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(rdseg(&["eval", "--config", &path(&bad)]).status.code(), Some(2));
    // Unknown flag: clap's own usage error.
    assert_eq!(rdseg(&["eval", "--frobnicate"]).status.code(), Some(2));
    // Detect with nothing to read.
    assert_eq!(rdseg(&["detect", "--out", &path(tmp.path())]).status.code(), Some(2));
    // A file that is not an RD map.
    let junk = tmp.path().join("junk.rdm");
    std::fs::write(&junk, b"RDM0 garbage").unwrap();
    assert_eq!(rdseg(&["detect", "--out", &path(tmp.path()), &path(&junk)]).status.code(), Some(2));
}

#[test]
fn empty_scene_gives_noise_maps_with_default_geometry() {
    let tmp = tempfile::tempdir().unwrap();
    let out = synth(tmp.path(), r#"{"seed": 1}"#, "1");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let truth = read_json(&tmp.path().join("synth/truth.json"));
    assert_eq!(truth["frames"][0]["targets"].as_array().unwrap().len(), 0);
    let dr = truth["range_resolution_m"].as_f64().unwrap();
    assert!((dr - 0.3516).abs() < 1e-3, "{dr}");
    let map = rdseg_core::rdm::load_rdm(tmp.path().join("synth/frame_0000.rdm")).unwrap();
    assert_eq!((map.range_bins, map.doppler_bins), (256, 128));
}

#[test]
fn synth_manifest_replays_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = r#"{"seed": 4, "targets": [{"range_m": 30.0, "velocity_mps": 5.0, "snr_db": 18.0}]}"#;
    assert!(synth(tmp.path(), scene, "2").status.success());
    let manifest = tmp.path().join("synth/manifest.json");
    let m = read_json(&manifest);
    assert_eq!(m["tool"], "rdseg");
    assert_eq!(m["command"], "synth");
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["files"].as_array().unwrap().len(), 3);
    let truth = read_json(&tmp.path().join("synth/truth.json"));
    assert_eq!(truth["frames"][0]["targets"][0]["range_bin"], 85);
    assert_eq!(truth["frames"][0]["targets"][0]["doppler_bin"], 80);

    let replay = tmp.path().join("replay");
    assert!(rdseg(&["synth", "--config", &path(&manifest), "--out", &path(&replay)]).status.success());
    for f in ["frame_0000.rdm", "frame_0001.rdm", "truth.json", "manifest.json"] {
        assert_eq!(std::fs::read(tmp.path().join("synth").join(f)).unwrap(), std::fs::read(replay.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_flag_changes_maps() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(synth(tmp.path(), r#"{"seed": 4}"#, "1").status.success());
    let other = tmp.path().join("other");
    let s = path(&tmp.path().join("scene.json"));
    assert!(rdseg(&["synth", "--scene", &s, "--seed", "5", "--out", &path(&other)]).status.success());
    assert_ne!(
        std::fs::read(tmp.path().join("synth/frame_0000.rdm")).unwrap(),
        std::fs::read(other.join("frame_0000.rdm")).unwrap()
    );
    assert_eq!(read_json(&other.join("manifest.json"))["seed"], 5);
}

#[test]
fn gibbs_chain_has_requested_length() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = r#"{"seed": 2, "targets": [{"range_m": 25.0, "velocity_mps": -3.0, "snr_db": 20.0},
                                           {"range_m": 55.0, "velocity_mps": 8.0, "snr_db": 15.0}]}"#;
    assert!(synth(tmp.path(), scene, "3").status.success());
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"estimate": {"mode": "gibbs", "gibbs": {"iterations": 50}}}"#).unwrap();
    let truth = path(&tmp.path().join("synth/truth.json"));
    let out = tmp.path().join("est");
    let o = rdseg(&["estimate", "--config", &path(&cfg), "--truth", &truth, "--out", &path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit = read_json(&out.join("fit.json"));
    assert_eq!(fit["mode"], "gibbs");
    assert_eq!(fit["n_segments"], 6);
    assert_eq!(fit["n_cells"], 6 * 119);
    assert_eq!(fit["gibbs"]["alpha_chain"].as_array().unwrap().len(), 50);
    assert_eq!(fit["gibbs"]["burn_in"], 10);
    assert!(fit.get("mixture").is_none());
}

#[test]
fn mle_reports_history_and_tiles_maps() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(synth(tmp.path(), r#"{"seed": 8}"#, "1").status.success());
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"estimate": {"mle": {"max_iterations": 25}}}"#).unwrap();
    let out = tmp.path().join("est");
    let map = path(&tmp.path().join("synth/frame_0000.rdm"));
    let o = rdseg(&["estimate", "--config", &path(&cfg), "--out", &path(&out), &map]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit = read_json(&out.join("fit.json"));
    // Non-overlapping 17 × 7 tiling of a 256 × 128 map.
    assert_eq!(fit["n_segments"], 15 * 18);
    let hist = fit["mixture"]["nll_history"].as_array().unwrap();
    assert!(!hist.is_empty() && hist.len() <= 26);
    assert!(fit["reference_max"].as_f64().unwrap() > 0.0);
    assert!(fit["single_mle"]["shape"].as_f64().unwrap() > 0.0);
}

#[test]
fn detect_uses_fit_reference_and_both_methods() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = r#"{"seed": 6, "targets": [{"range_m": 40.0, "velocity_mps": 2.0, "snr_db": 25.0}]}"#;
    assert!(synth(tmp.path(), scene, "1").status.success());
    let map = path(&tmp.path().join("synth/frame_0000.rdm"));

    let skew = tmp.path().join("skew");
    assert!(rdseg(&["detect", "--out", &path(&skew), &map]).status.success());
    let text = std::fs::read_to_string(skew.join("detections.csv")).unwrap();
    assert!(text.starts_with(
        "frame_id,range_bin_lo,range_bin_hi,doppler_bin_lo,doppler_bin_hi,range_m,velocity_mps,skewness,peak_db,centered\n"
    ));
    assert_eq!(read_json(&skew.join("manifest.json"))["extra"]["reference_max_source"], "per_map_max");

    let fit = tmp.path().join("fit.json");
    std::fs::write(
        &fit,
        r#"{"mode": "mle", "n_cells": 1, "n_segments": 1, "floor": 1e-300, "floored_cells": 0,
            "reference_max": 1e9, "seed": 0}"#,
    )
    .unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, format!(r#"{{"detect": {{"fit": {:?}}}}}"#, path(&fit))).unwrap();
    let with_fit = tmp.path().join("with_fit");
    assert!(rdseg(&["detect", "--config", &path(&cfg), "--out", &path(&with_fit), &map]).status.success());
    let m = read_json(&with_fit.join("manifest.json"));
    assert_eq!(m["extra"]["reference_max_source"], "fit");
    assert_eq!(m["extra"]["reference_max"], 1e9);

    let cfar = tmp.path().join("cfar");
    let cal_cfg = tmp.path().join("cal.json");
    std::fs::write(&cal_cfg, r#"{"detect": {"method": "oscfar", "calibration": {"n_maps": 2}}}"#).unwrap();
    assert!(rdseg(&["detect", "--config", &path(&cal_cfg), "--out", &path(&cfar), &map]).status.success());
    let text = std::fs::read_to_string(cfar.join("cfar_detections.csv")).unwrap();
    assert!(text.starts_with("frame_id,range_bin,doppler_bin,range_m,velocity_mps,power_db,threshold_db\n"));
    assert!(text.lines().count() > 1, "a 25 dB target crosses OS-CFAR");
    assert_eq!(read_json(&cfar.join("manifest.json"))["extra"]["scale_source"], "monte_carlo");
}

#[test]
fn calibration_file_feeds_detect() {
    let tmp = tempfile::tempdir().unwrap();
    let cal = tmp.path().join("cal");
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"cfar_calibrate": {"noise": {"n_maps": 2}, "pfas": [0.001]}}"#).unwrap();
    assert!(rdseg(&["cfar-calibrate", "--config", &path(&cfg), "--out", &path(&cal)]).status.success());
    let table = read_json(&cal.join("cfar_calibration.json"));
    assert_eq!(table[0]["design_pfa"], 1e-3);
    assert!(table[0]["scale"].as_f64().unwrap() > 1.0);

    assert!(synth(tmp.path(), r#"{"seed": 1}"#, "1").status.success());
    let map = path(&tmp.path().join("synth/frame_0000.rdm"));
    let det_cfg = tmp.path().join("det.json");
    let body = format!(
        r#"{{"detect": {{"method": "oscfar", "cfar": {{"design_pfa": 0.001}}, "cfar_calibration": {:?}}}}}"#,
        path(&cal.join("cfar_calibration.json"))
    );
    std::fs::write(&det_cfg, body).unwrap();
    let out = tmp.path().join("det");
    assert!(rdseg(&["detect", "--config", &path(&det_cfg), "--out", &path(&out), &map]).status.success());
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["extra"]["scale_source"], "calibration_file");
    assert_eq!(m["extra"]["scale"], table[0]["scale"]);

    // A design Pfa missing from the table is a schema error.
    let body = format!(
        r#"{{"detect": {{"method": "oscfar", "cfar_calibration": {:?}}}}}"#,
        path(&cal.join("cfar_calibration.json"))
    );
    std::fs::write(&det_cfg, body).unwrap();
    assert_eq!(rdseg(&["detect", "--config", &path(&det_cfg), "--out", &path(&out), &map]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(synth(tmp.path(), r#"{"seed": 3}"#, "1").status.success());
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"estimate": {"mle": {"learning_rate": 1e12, "max_iterations": 50}}}"#).unwrap();
    let map = path(&tmp.path().join("synth/frame_0000.rdm"));
    let o = rdseg(&["estimate", "--config", &path(&cfg), "--out", &path(&tmp.path().join("e")), &map]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn eval_with_nothing_enabled_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"eval": {"sweep": null, "study": null, "redundancy": null}}"#).unwrap();
    assert_eq!(rdseg(&["eval", "--config", &path(&cfg), "--out", &path(tmp.path())]).status.code(), Some(2));
}

#[test]
fn small_eval_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"eval": {
            "sweep": {"snr_db": [10.0], "n_trials": 3, "cfar_calibration_maps": 1},
            "study": {"n_per_class": 20, "grid_points": 11},
            "redundancy": {"n_trials": 3}
        }}"#,
    )
    .unwrap();
    let out = tmp.path().join("eval");
    let o = rdseg(&["eval", "--config", &path(&cfg), "--seed", "3", "--out", &path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "sweep_skew.csv", "sweep_cfar.csv", "sweep_summary.json", "skew_cdf.csv", "skew_kde.csv",
        "skew_summary.csv", "redundancy.json", "manifest.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let skew = std::fs::read_to_string(out.join("sweep_skew.csv")).unwrap();
    // Header plus one row per threshold.
    assert_eq!(skew.lines().count(), 1 + 4);
    let cdf = std::fs::read_to_string(out.join("skew_cdf.csv")).unwrap();
    assert_eq!(cdf.lines().next().unwrap(), "skewness,h0,h1,h1_two_target");
    assert_eq!(cdf.lines().count(), 12);
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["config"]["eval"]["sweep"]["seed"], 3);
    assert_eq!(m["files"].as_array().unwrap().len(), 7);
}
