#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use vpcal::geometry::{
    build_panel_env, compute_beta, diffuse_convolve, w_avg_from_env, Direction, EnvMap,
};

/// Form factor from a differential area to a rectangle of half-extents
/// `a`×`b` centered on its normal at unit distance, summed over the four
/// corner-anchored quadrants.
fn analytic_beta(a: f64, b: f64) -> f64 {
    let sa = (1.0 + a * a).sqrt();
    let sb = (1.0 + b * b).sqrt();
    let quadrant = (a / sa * (b / sa).atan() + b / sb * (a / sb).atan()) / (2.0 * std::f64::consts::PI);
    4.0 * quadrant
}

fn random_env(height: usize, seed: u64) -> EnvMap {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    EnvMap::from_fn(height, |_| [rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0)])
        .unwrap()
}

#[test]
fn analytic_oracle_reference_values() {
    // reference values from numerical quadrature of ∫∫ dx dy / (π(1+x²+y²)²)
    assert!((analytic_beta(0.6, 0.6) - 0.311_277_112_091).abs() < 1e-11);
    assert!((analytic_beta(0.5, 0.5) - 0.239_456_470_461).abs() < 1e-11);
    assert!((analytic_beta(1e6, 1e6) - 1.0).abs() < 1e-5);
}

#[test]
fn beta_matches_form_factor() {
    for h in [0.25, 0.5, 0.6, 1.0] {
        let beta = compute_beta(h, 1024).unwrap();
        let exact = analytic_beta(h, h);
        println!("h={h}: beta {beta:.6} analytic {exact:.6}");
        assert!((beta - exact).abs() < 1e-3, "h={h}: {beta} vs {exact}");
    }
}

#[test]
fn beta_converges() {
    for h in [0.5, 0.6] {
        let coarse = compute_beta(h, 512).unwrap();
        let fine = compute_beta(h, 1024).unwrap();
        println!("h={h}: beta(512) {coarse:.6} beta(1024) {fine:.6}");
        assert!((coarse - fine).abs() < 1e-3, "h={h}: {coarse} vs {fine}");
    }
}

#[test]
fn beta_monotone_and_bounded() {
    let mut last = 0.0;
    for h in [0.05, 0.1, 0.25, 0.5, 0.6, 1.0, 2.0, 10.0, 100.0] {
        let beta = compute_beta(h, 256).unwrap();
        assert!(beta > 0.0 && beta <= 1.0, "h={h}: {beta}");
        assert!(beta >= last, "h={h}: {beta} < {last}");
        last = beta;
    }
    assert!((last - 1.0).abs() < 2e-3, "{last}");
}

#[test]
fn panel_w_avg_is_gray_beta() {
    let env = build_panel_env(0.6, 256).unwrap();
    let beta = compute_beta(0.6, 256).unwrap();
    let w = w_avg_from_env(&env, Direction::frontal());
    for c in 0..3 {
        assert!((w[c] - beta).abs() < 1e-12);
    }
}

#[test]
fn uniform_env_normalized() {
    for height in [256, 512] {
        let env = EnvMap::uniform(height, [1.0, 2.0, 3.0]).unwrap();
        for n in [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.3, -0.8, 0.2], [0.0, 1.0, 0.0]] {
            let w = w_avg_from_env(&env, Direction::new(n).unwrap());
            for c in 0..3 {
                let v = (c + 1) as f64;
                assert!((w[c] - v).abs() < 2e-3 * v, "n={n:?} {w:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convolution_is_linear(
        s1 in 0u64..10_000,
        s2 in 0u64..10_000,
        a in 0.0f64..2.0,
        b in 0.0f64..2.0,
        n in prop::array::uniform3(-1.0f64..1.0),
    ) {
        prop_assume!(n.iter().map(|v| v * v).sum::<f64>() > 1e-3);
        let n = Direction::new(n).unwrap();
        let (e1, e2) = (random_env(32, s1), random_env(32, s2));
        let sum = EnvMap::new(64, 32, e1.data().iter().zip(e2.data()).map(|(x, y)| {
            [0, 1, 2].map(|c| a * x[c] + b * y[c])
        }).collect()).unwrap();
        let lhs = diffuse_convolve(&sum, n);
        let c1 = diffuse_convolve(&e1, n);
        let c2 = diffuse_convolve(&e2, n);
        for c in 0..3 {
            let rhs = a * c1[c] + b * c2[c];
            prop_assert!((lhs[c] - rhs).abs() < 1e-9, "{} vs {}", lhs[c], rhs);
        }
    }

    #[test]
    fn back_hemisphere_is_invisible(seed in 0u64..10_000, n in prop::array::uniform3(-1.0f64..1.0)) {
        prop_assume!(n.iter().map(|v| v * v).sum::<f64>() > 1e-3);
        let n = Direction::new(n).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let env = EnvMap::from_fn(32, |d| {
            if n.dot(d) < 0.0 { [rng.gen_range(0.0..5.0); 3] } else { [0.0; 3] }
        }).unwrap();
        prop_assert_eq!(diffuse_convolve(&env, n), [0.0; 3]);
    }
}
