#![allow(clippy::needless_range_loop)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vpcal::calibration::{chart_error, predict_patches, Mat3};
use vpcal::imaging::{read_chart_csv, write_pfm, ChartSamples, LinearImage};
use vpcal::spectral::{brute_force_q, build_scene, OracleScene, Scenario, SpectralCurve};
use vpcal_cli::args::SolveArgs;
use vpcal_cli::config::PipelineConfig;
use vpcal_cli::fixture::{cmd_oracle, write_fixture};
use vpcal_cli::solve::{cmd_solve, SolveOutcome, BUNDLE_FILE, M_Q_CSV, REPORT_FILE, SRL_FILE};

fn vpcal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vpcal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn solve_args(config: &Path) -> SolveArgs {
    SolveArgs {
        config: config.to_owned(),
        half_extent: None,
        resolution: None,
        cond_limit_q: None,
        cond_limit_sl: None,
        white_reflectance: None,
        out: None,
    }
}

fn solve(config: &Path) -> SolveOutcome {
    cmd_solve(&PipelineConfig::load(&solve_args(config)).unwrap()).unwrap()
}

fn oracle_fixture(dir: &Path, scenario: Scenario, seed: u64) -> PathBuf {
    cmd_oracle(seed, scenario, dir).unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            out.extend(read_dir_sorted(&p));
        } else {
            out.push((p.strip_prefix(dir).unwrap().to_owned(), fs::read(&p).unwrap()));
        }
    }
    out
}

#[test]
fn oracle_command_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = vpcal(&["oracle", "--seed", "11", "--scenario", "broad", "--out", dir.path().to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (fa, fb) = (read_dir_sorted(a.path()), read_dir_sorted(b.path()));
    assert!(fa.len() >= 8);
    assert_eq!(fa, fb);
}

#[test]
fn solve_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = oracle_fixture(dir.path(), Scenario::Broad, 4);
    let runs: Vec<_> = ["run_a", "run_b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let status = vpcal(&["solve", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
            assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
            read_dir_sorted(&out)
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert!(runs[0].iter().any(|(p, _)| p == Path::new(BUNDLE_FILE)));
    assert!(runs[0].iter().any(|(p, _)| p == Path::new(REPORT_FILE)));
}

#[test]
fn broad_fixture_q_matches_brute_force_and_improves() {
    let dir = tempfile::tempdir().unwrap();
    let config = oracle_fixture(dir.path(), Scenario::Broad, 2);
    let outcome = solve(&config);
    let b = &outcome.bundle;
    let targets = read_chart_csv(dir.path().join("target.csv"), 18).unwrap();
    let predicted = predict_patches(&outcome.srl, &b.m, outcome.report.w_avg.value, b.beta).unwrap();
    let predicted = ChartSamples::new(&predicted, 18).unwrap();
    let brute = brute_force_q(&predicted, &targets, &[1.0; 24]).unwrap();
    let d = (b.q - brute).frobenius() / brute.frobenius();
    assert!(d < 1e-9, "{d:e}");

    let e = &outcome.report.chart_error;
    for c in 0..3 {
        assert!(e.lit_m_q.per_channel[c] <= e.lit_m_only.per_channel[c], "{e:?}");
    }
    assert!(e.lit_m_q.mean < e.lit_m_only.mean);
    assert!(outcome.n_available());
    assert_eq!(outcome.report.diagnostics.q_rank, 3);
}

#[test]
fn report_errors_reproduce_from_written_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let config = oracle_fixture(dir.path(), Scenario::Broad, 8);
    let outcome = solve(&config);
    let out = &outcome.output_dir;
    let e = &outcome.report.chart_error;
    for v in [&e.lit_m_only, &e.lit_m_q, &e.displayed_without_black_level, &e.displayed_with_black_level] {
        let t = read_chart_csv(out.join(v.target_csv), 18).unwrap();
        let m = read_chart_csv(out.join(v.measured_csv), 18).unwrap();
        let err = chart_error(&t, &m).unwrap();
        for c in 0..3 {
            // independent recomputation of (1/24)·Σ|m − t| / t_white
            let direct: f64 = (0..24)
                .map(|j| (m.patch(j)[c] - t.patch(j)[c]).abs() / t.white()[c])
                .sum::<f64>()
                / 24.0;
            assert_eq!(err[c], v.per_channel[c]);
            assert!((direct - err[c]).abs() < 1e-15);
        }
        assert!((v.mean - err.iter().sum::<f64>() / 3.0).abs() < 1e-15);
    }
    // removing the black level must help the displayed chart
    assert!(e.displayed_with_black_level.mean < e.displayed_without_black_level.mean);
}

#[test]
fn rgb_led_fixture_needs_little_correction() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = solve(&oracle_fixture(dir.path(), Scenario::RgbLed, 5));
    let d = (outcome.bundle.q - Mat3::IDENTITY).max_abs();
    assert!(d < 0.05, "{d}");
}

#[test]
fn monochromatic_fixture_exits_one_with_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let config = oracle_fixture(dir.path(), Scenario::Monochromatic, 0);
    let out = vpcal(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out").join(REPORT_FILE)).unwrap()).unwrap();
    assert_eq!(report["n_available"], false);
    let bundle: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out").join(BUNDLE_FILE)).unwrap()).unwrap();
    assert!(bundle["N"].is_null());
    assert!(String::from_utf8_lossy(&out.stderr).contains("N unavailable"));
}

#[test]
fn identity_scene_reproduces_targets() {
    // stage LEDs as the original illuminant and spectrally flat patches:
    // the stage reproduces the scene exactly
    let base = build_scene(Scenario::Broad, 0).unwrap();
    let led_sum = base.leds[0]
        .combine(1.0, &base.leds[1], 1.0)
        .unwrap()
        .combine(1.0, &base.leds[2], 1.0)
        .unwrap();
    let flats: Vec<SpectralCurve> = (0..24)
        .map(|j| SpectralCurve::constant(if j == 18 { 0.9 } else { 0.03 + 0.03 * j as f64 }).unwrap())
        .collect();
    let scene = OracleScene::new(base.camera.clone(), base.leds.clone(), led_sum, flats, 18).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let outcome = solve(&write_fixture(&scene, dir.path()).unwrap());
    let e = &outcome.report.chart_error;
    assert!(e.lit_m_only.mean < 1e-6, "{e:?}");
    assert!(e.lit_m_q.mean < 1e-6, "{e:?}");
    assert!((outcome.bundle.q - Mat3::IDENTITY).max_abs() < 1e-5);
}

#[test]
fn simulate_reproduces_solve_predictions_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let config = oracle_fixture(dir.path(), Scenario::Broad, 6);
    let outcome = solve(&config);
    let out = &outcome.output_dir;
    let w = outcome.report.w_avg.value;
    let w = format!("{:?},{:?},{:?}", w[0], w[1], w[2]);
    let sim = dir.path().join("sim");
    let target = dir.path().join("target.csv");
    let res = vpcal(&[
        "simulate",
        "--bundle", out.join(BUNDLE_FILE).to_str().unwrap(),
        "--srl", out.join(SRL_FILE).to_str().unwrap(),
        "--w-avg", &w,
        "--target", target.to_str().unwrap(),
        "--out", sim.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(fs::read(sim.join("simulated.csv")).unwrap(), fs::read(out.join(M_Q_CSV)).unwrap());
    assert!(sim.join("comparison.png").exists());
    let printed = String::from_utf8_lossy(&res.stdout).to_string();
    assert!(printed.contains(&format!("mean={:.6}", outcome.report.chart_error.lit_m_q.mean)), "{printed}");
}

#[test]
fn simulate_rejects_tampered_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let config = oracle_fixture(dir.path(), Scenario::RgbLed, 1);
    let outcome = solve(&config);
    let out = &outcome.output_dir;
    let mut bundle: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join(BUNDLE_FILE)).unwrap()).unwrap();
    bundle["beta"] = serde_json::json!(0.0);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, bundle.to_string()).unwrap();
    let res = vpcal(&[
        "simulate",
        "--bundle", bad.to_str().unwrap(),
        "--srl", out.join(SRL_FILE).to_str().unwrap(),
        "--w-avg", "1,1,1",
        "--out", dir.path().join("sim").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("bundle stage failed"));
}

#[test]
fn missing_input_exits_two_naming_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let config = oracle_fixture(dir.path(), Scenario::Broad, 0);
    fs::remove_file(dir.path().join("chart_green.pfm")).unwrap();
    let res = vpcal(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("stage failed") && stderr.contains("chart_green.pfm"), "{stderr}");

    let res = vpcal(&["solve", "--config", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("config stage failed"));
}

#[test]
fn config_rejects_conflicting_w_avg_sources() {
    let dir = tempfile::tempdir().unwrap();
    let config = oracle_fixture(dir.path(), Scenario::Broad, 0);
    let mut cfg = PipelineConfig::load(&solve_args(&config)).unwrap();
    cfg.white_patch_rgb = Some([0.9, 0.9, 0.9]);
    cfg.env_map = Some("env.pfm".into());
    cfg.env_facing = Some([0.0, 0.0, 1.0]);
    assert!(cfg.validate().is_err());
    cfg.white_patch_rgb = None;
    cfg.env_facing = None;
    let err = cfg.validate().unwrap_err();
    assert_eq!(err.stage, "config");
    cfg.weights.pop();
    assert!(cfg.validate().is_err());
}

#[test]
fn env_map_and_white_patch_sources() {
    let dir = tempfile::tempdir().unwrap();
    let config = oracle_fixture(dir.path(), Scenario::Broad, 3);
    let reference = solve(&config);
    let w = reference.report.w_avg.value;

    // a white patch reading equal to the target's own white gives the same run
    let mut cfg = PipelineConfig::load(&solve_args(&config)).unwrap();
    let white = read_chart_csv(dir.path().join("target.csv"), 18).unwrap().white();
    cfg.white_patch_rgb = Some(white);
    cfg.output_dir = dir.path().join("patch");
    let patch = cmd_solve(&cfg).unwrap();
    assert_eq!(patch.bundle, reference.bundle);
    assert_eq!(patch.report.w_avg.source, "white_patch_rgb");

    // a uniform environment of radiance w_avg lights the chart with w_avg
    let env = LinearImage::filled(256, 128, w.map(|v| v as f32)).unwrap();
    write_pfm(dir.path().join("env.pfm"), &env).unwrap();
    let mut cfg = PipelineConfig::load(&solve_args(&config)).unwrap();
    cfg.env_map = Some(dir.path().join("env.pfm"));
    cfg.env_facing = Some([0.0, 0.0, 1.0]);
    cfg.output_dir = dir.path().join("env");
    let from_env = cmd_solve(&cfg).unwrap();
    assert_eq!(from_env.report.w_avg.source, "env_map");
    for c in 0..3 {
        assert!((from_env.report.w_avg.value[c] - w[c]).abs() < 5e-3 * w[c]);
    }
    assert!((from_env.bundle.q - reference.bundle.q).max_abs() < 1e-2);
}

#[test]
fn beta_and_chart_error_commands() {
    let out = vpcal(&["beta", "--half-extent", "0.5", "--resolution", "512"]);
    assert!(out.status.success());
    let beta: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((beta - 0.2394).abs() < 2e-3, "{beta}");
    assert_eq!(vpcal(&["beta", "--half-extent", "-1"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    oracle_fixture(dir.path(), Scenario::Broad, 1);
    let t = dir.path().join("target.csv");
    let out = vpcal(&["chart-error", t.to_str().unwrap(), t.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("mean=0.000000"));
}
