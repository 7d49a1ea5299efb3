use vpcal::calibration::{
    chart_error, post_correct_chart, predict_patches, simulate_lit_chart, solve_m, solve_n,
    solve_q, Mat3, DEFAULT_COND_LIMIT_Q, UNIFORM_WEIGHTS,
};
use vpcal::imaging::{ChartSamples, PATCH_COUNT};
use vpcal::spectral::{
    brute_force_q, build_scene, lit_chart_under_stage, oracle_calibration, random_scene,
    OracleScene, Scenario, SpectralCurve,
};

const BETA: f64 = 0.3113;

struct Run {
    m: Mat3,
    q: Mat3,
    m_only: ChartSamples,
    m_q: ChartSamples,
    targets: ChartSamples,
}

fn run(scene: &OracleScene) -> Run {
    let cal = oracle_calibration(scene, BETA).unwrap();
    let m = solve_m(&cal.sl, 1e6).unwrap();
    let q = solve_q(&cal.srl, &m, cal.w_avg, &cal.targets, BETA, &UNIFORM_WEIGHTS).unwrap().q;
    let m_only = simulate_lit_chart(&cal.srl, &m, cal.w_avg, BETA).unwrap().chart;
    let m_q = post_correct_chart(&m_only, &q).unwrap().chart;
    Run { m, q, m_only, m_q, targets: cal.targets }
}

fn rel_frobenius(a: &Mat3, b: &Mat3) -> f64 {
    (*a - *b).frobenius() / b.frobenius()
}

#[test]
fn solve_q_agrees_with_brute_force() {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let scene = random_scene(seed).unwrap();
        let cal = oracle_calibration(&scene, BETA).unwrap();
        let m = solve_m(&cal.sl, 1e6).unwrap();
        let q = solve_q(&cal.srl, &m, cal.w_avg, &cal.targets, BETA, &UNIFORM_WEIGHTS).unwrap();
        let predicted = predict_patches(&cal.srl, &m, cal.w_avg, BETA).unwrap();
        let predicted = ChartSamples::new(&predicted, cal.targets.white_index()).unwrap();
        let brute = brute_force_q(&predicted, &cal.targets, &UNIFORM_WEIGHTS).unwrap();
        let d = rel_frobenius(&q.q, &brute);
        worst = worst.max(d);
        assert!(d < 1e-9, "seed {seed}: {d:e}");
    }
    println!("worst relative Frobenius distance {worst:e}");
}

#[test]
fn flat_patches_scale_sl() {
    for seed in 0..20 {
        let scene = random_scene(seed).unwrap();
        let cal = oracle_calibration(&scene, BETA).unwrap();
        for j in 18..PATCH_COUNT {
            let r = scene.reflectances[j].at(0);
            assert!((*cal.srl.get(j) - cal.sl.scale(BETA * r)).max_abs() < 1e-12);
        }
    }
}

#[test]
fn simulation_matches_spectral_integration() {
    for seed in 0..20 {
        let scene = random_scene(seed).unwrap();
        let cal = oracle_calibration(&scene, BETA).unwrap();
        let m = solve_m(&cal.sl, 1e6).unwrap();
        let predicted = predict_patches(&cal.srl, &m, cal.w_avg, BETA).unwrap();
        let direct = lit_chart_under_stage(&scene, m * cal.w_avg);
        for j in 0..PATCH_COUNT {
            for c in 0..3 {
                assert!((predicted[j][c] - direct[j][c]).abs() < 1e-9, "seed {seed} patch {j}");
            }
        }
    }
}

#[test]
fn led_sum_illuminant_with_flat_patches_gives_identity() {
    let base = build_scene(Scenario::Broad, 0).unwrap();
    let led_sum = base.leds[0]
        .combine(1.0, &base.leds[1], 1.0)
        .unwrap()
        .combine(1.0, &base.leds[2], 1.0)
        .unwrap();
    let flats: Vec<SpectralCurve> = (0..PATCH_COUNT)
        .map(|j| SpectralCurve::constant(0.03 + 0.035 * j as f64).unwrap())
        .collect();
    let scene = OracleScene::new(base.camera.clone(), base.leds.clone(), led_sum, flats, 18).unwrap();
    let r = run(&scene);
    assert!((r.q - Mat3::IDENTITY).max_abs() < 1e-9, "{:?}", r.q);
}

#[test]
fn monochromatic_q_is_singular() {
    for seed in 0..10 {
        let r = run(&build_scene(Scenario::Monochromatic, seed).unwrap());
        let s = r.q.singular_values();
        assert!(s[2] / s[0] < 1e-4, "seed {seed}: {s:?}");
        assert!(solve_n(&r.m, &r.q, DEFAULT_COND_LIMIT_Q).is_none());
    }
}

#[test]
fn broad_scenario_improves_every_channel() {
    for seed in 0..50 {
        let r = run(&build_scene(Scenario::Broad, seed).unwrap());
        let before = chart_error(&r.targets, &r.m_only).unwrap();
        let after = chart_error(&r.targets, &r.m_q).unwrap();
        for c in 0..3 {
            assert!(after[c] <= before[c], "seed {seed}: {before:?} -> {after:?}");
        }
        assert!((0..3).any(|c| after[c] < before[c]));
    }
}

#[test]
fn rgb_led_scenario_needs_little_correction() {
    for seed in 0..50 {
        let r = run(&build_scene(Scenario::RgbLed, seed).unwrap());
        let d = (r.q - Mat3::IDENTITY).max_abs();
        assert!(d < 0.05, "seed {seed}: {d}");
    }
}

#[test]
fn post_correction_lowers_summed_error_on_oracle_fixtures() {
    let scenes = (0..20).flat_map(|seed| {
        [Scenario::Broad, Scenario::RgbLed, Scenario::Monochromatic]
            .map(|s| build_scene(s, seed).unwrap())
            .into_iter()
            .chain([random_scene(seed).unwrap()])
    });
    for (i, scene) in scenes.enumerate() {
        let r = run(&scene);
        let before: f64 = chart_error(&r.targets, &r.m_only).unwrap().iter().sum();
        let after: f64 = chart_error(&r.targets, &r.m_q).unwrap().iter().sum();
        assert!(after <= before, "fixture {i}: {before} -> {after}");
    }
}
