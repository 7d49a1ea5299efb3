use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    integrate_response, integrate_values, make_gaussian_band, read_curve_csv, write_curve_csv,
    Result, SpectralCurve, SpectralError, GRID_LEN,
};
use crate::calibration::{build_sl, build_srl, Mat3, SrlSet};
use crate::geometry::DEFAULT_WHITE_REFLECTANCE;
use crate::imaging::{ChartSamples, DEFAULT_WHITE_INDEX, PATCH_COUNT};
use crate::Rgb;

/// Flat reflectances of the neutral row, white first.
pub const NEUTRAL_REFLECTANCES: [f64; 6] = [0.9, 0.59, 0.36, 0.2, 0.09, 0.03];

const STAGE_LEDS: [(f64, f64); 3] = [(630.0, 20.0), (525.0, 20.0), (465.0, 20.0)];
const CAMERA_BANDS: [(f64, f64); 3] = [(600.0, 70.0), (540.0, 70.0), (460.0, 70.0)];
const SODIUM_LINE_NM: f64 = 589.0;

/// Chromatic patch shapes, loosely following the first three rows of a
/// standard 24-patch chart. Each is a baseline plus an optional rising edge,
/// falling edge and bump; an amplitude of zero disables a term.
struct PatchShape {
    base: f64,
    /// `(edge nm, width nm, amplitude)` of a logistic rise toward the red.
    rise: (f64, f64, f64),
    /// `(edge nm, width nm, amplitude)` of a logistic fall toward the red.
    fall: (f64, f64, f64),
    /// `(center nm, fwhm nm, amplitude)` of a Gaussian bump.
    bump: (f64, f64, f64),
}

const NONE: (f64, f64, f64) = (0.0, 1.0, 0.0);

const fn patch(base: f64, rise: (f64, f64, f64), fall: (f64, f64, f64), bump: (f64, f64, f64)) -> PatchShape {
    PatchShape { base, rise, fall, bump }
}

const CHROMATIC_PATCHES: [PatchShape; 18] = [
    patch(0.05, (600.0, 25.0, 0.30), NONE, NONE),                 // dark skin
    patch(0.18, (590.0, 25.0, 0.50), NONE, NONE),                 // light skin
    patch(0.05, NONE, (500.0, 20.0, 0.20), NONE),                 // blue sky
    patch(0.04, (690.0, 15.0, 0.35), NONE, (550.0, 60.0, 0.08)),  // foliage
    patch(0.12, (660.0, 20.0, 0.30), (500.0, 20.0, 0.25), NONE),  // blue flower
    patch(0.06, NONE, (580.0, 20.0, 0.40), (500.0, 60.0, 0.10)),  // bluish green
    patch(0.05, (580.0, 12.0, 0.60), NONE, NONE),                 // orange
    patch(0.05, NONE, (490.0, 15.0, 0.30), NONE),                 // purplish blue
    patch(0.06, (595.0, 12.0, 0.55), (440.0, 15.0, 0.08), NONE),  // moderate red
    patch(0.05, (670.0, 20.0, 0.35), (460.0, 20.0, 0.10), NONE),  // purple
    patch(0.06, (520.0, 15.0, 0.50), NONE, NONE),                 // yellow green
    patch(0.05, (555.0, 12.0, 0.65), NONE, NONE),                 // orange yellow
    patch(0.05, NONE, (480.0, 12.0, 0.30), NONE),                 // blue
    patch(0.04, NONE, NONE, (530.0, 60.0, 0.30)),                 // green
    patch(0.04, (600.0, 10.0, 0.55), NONE, NONE),                 // red
    patch(0.05, (540.0, 12.0, 0.80), NONE, NONE),                 // yellow
    patch(0.08, (600.0, 15.0, 0.60), (470.0, 20.0, 0.25), NONE),  // magenta
    patch(0.05, NONE, (560.0, 20.0, 0.45), NONE),                 // cyan
];

/// Illuminant class of a generated scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Smooth daylight-like spectrum.
    Broad,
    /// Mixture of three narrow bands from an LED family like the stage's:
    /// peaks within 2 nm of the stage LEDs, widths 19–22 nm, unequal mix.
    RgbLed,
    /// A single line at the sodium D wavelength.
    Monochromatic,
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "broad" => Ok(Scenario::Broad),
            "rgb-led" => Ok(Scenario::RgbLed),
            "monochromatic" => Ok(Scenario::Monochromatic),
            other => Err(format!(
                "unknown scenario {other:?} (broad, rgb-led, monochromatic)"
            )),
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::Broad => "broad",
            Scenario::RgbLed => "rgb-led",
            Scenario::Monochromatic => "monochromatic",
        })
    }
}

/// Everything the oracle needs to synthesize calibration captures.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleScene {
    pub camera: [SpectralCurve; 3],
    pub leds: [SpectralCurve; 3],
    pub illuminant: SpectralCurve,
    pub reflectances: Vec<SpectralCurve>,
    pub white_index: usize,
}

impl OracleScene {
    pub fn new(
        camera: [SpectralCurve; 3],
        leds: [SpectralCurve; 3],
        illuminant: SpectralCurve,
        reflectances: Vec<SpectralCurve>,
        white_index: usize,
    ) -> Result<Self> {
        if reflectances.len() != PATCH_COUNT {
            return Err(SpectralError::Scene(format!(
                "expected {PATCH_COUNT} reflectances, got {}",
                reflectances.len()
            )));
        }
        if white_index >= PATCH_COUNT {
            return Err(SpectralError::Scene(format!(
                "white index {white_index} out of range"
            )));
        }
        if reflectances.iter().any(|r| r.max() > 1.0) {
            return Err(SpectralError::Scene("reflectance above 1".into()));
        }
        if camera.iter().chain(&leds).any(SpectralCurve::is_zero) {
            return Err(SpectralError::Scene(
                "camera and LED curves must not be identically zero".into(),
            ));
        }
        Ok(Self {
            camera,
            leds,
            illuminant,
            reflectances,
            white_index,
        })
    }
}

/// Ground-truth calibration quantities for a scene.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCalibration {
    pub sl: Mat3,
    pub srl: SrlSet,
    pub targets: ChartSamples,
    pub w_avg: Rgb,
}

/// Integrates the scene into `[SL]`, `[SRL]_j` (at capture scale `β`), the
/// target chart under the illuminant, and `w_avg` from the white patch.
pub fn oracle_calibration(scene: &OracleScene, beta: f64) -> Result<OracleCalibration> {
    crate::calibration::check_beta(beta)?;
    let flat = SpectralCurve::constant(1.0)?;
    let [r, g, b] = scene
        .leds
        .each_ref()
        .map(|led| integrate_response(&scene.camera, led, &flat));
    let sl = build_sl(r, g, b)?;

    let per_channel: Vec<ChartSamples> = scene
        .leds
        .iter()
        .map(|led| {
            let patches: Vec<Rgb> = scene
                .reflectances
                .iter()
                .map(|refl| integrate_response(&scene.camera, led, refl).map(|v| beta * v))
                .collect();
            ChartSamples::new(&patches, scene.white_index)
        })
        .collect::<std::result::Result<_, _>>()?;
    let srl = build_srl(&per_channel[0], &per_channel[1], &per_channel[2])?;

    let patches: Vec<Rgb> = scene
        .reflectances
        .iter()
        .map(|refl| integrate_response(&scene.camera, &scene.illuminant, refl))
        .collect();
    let targets = ChartSamples::new(&patches, scene.white_index)?;

    let white = SpectralCurve::constant(DEFAULT_WHITE_REFLECTANCE)?;
    let w_avg = integrate_response(&scene.camera, &scene.illuminant, &white)
        .map(|v| v / DEFAULT_WHITE_REFLECTANCE);
    Ok(OracleCalibration {
        sl,
        srl,
        targets,
        w_avg,
    })
}

/// The chart lit by the full, even stage sphere driven with LED amounts
/// `drive`, integrated wavelength by wavelength from the mixed stage
/// spectrum `Σ_c drive_c·L_c(λ)`. Negative drive is allowed and is
/// integrated as is.
pub fn lit_chart_under_stage(scene: &OracleScene, drive: Rgb) -> Vec<Rgb> {
    let mut stage = [0.0; GRID_LEN];
    for (i, s) in stage.iter_mut().enumerate() {
        *s = (0..3).map(|c| drive[c] * scene.leds[c].at(i)).sum();
    }
    scene
        .reflectances
        .iter()
        .map(|refl| integrate_values(&scene.camera, &stage, refl))
        .collect()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn gaussian(l: f64, center: f64, fwhm: f64) -> f64 {
    (-4.0 * std::f64::consts::LN_2 * ((l - center) / fwhm).powi(2)).exp()
}

/// Evaluates a patch shape with every edge/center shifted by up to ±8 nm and
/// every amplitude scaled by 0.85–1.15.
fn jittered_reflectance(shape: &PatchShape, rng: &mut ChaCha8Rng) -> Result<SpectralCurve> {
    let mut jitter = |(pos, width, amp): (f64, f64, f64)| {
        (pos + rng.gen_range(-8.0..8.0), width, amp * rng.gen_range(0.85..1.15))
    };
    let (rise, fall, bump) = (jitter(shape.rise), jitter(shape.fall), jitter(shape.bump));
    SpectralCurve::from_fn(|l| {
        let v = shape.base
            + rise.2 * logistic((l - rise.0) / rise.1)
            + fall.2 * logistic((fall.0 - l) / fall.1)
            + bump.2 * gaussian(l, bump.0, bump.1);
        v.clamp(0.0, 1.0)
    })
}

fn chart_reflectances(rng: &mut ChaCha8Rng) -> Result<Vec<SpectralCurve>> {
    let mut out = Vec::with_capacity(PATCH_COUNT);
    for shape in &CHROMATIC_PATCHES {
        out.push(jittered_reflectance(shape, rng)?);
    }
    for r in NEUTRAL_REFLECTANCES {
        out.push(SpectralCurve::constant(r)?);
    }
    Ok(out)
}

fn bands(spec: [(f64, f64); 3]) -> Result<[SpectralCurve; 3]> {
    let [a, b, c] = spec.map(|(center, fwhm)| make_gaussian_band(center, fwhm, 1.0));
    Ok([a?, b?, c?])
}

/// Scales the LEDs together so displayed white reads 1 in camera green, and
/// the illuminant so `w_avg` reads 1 in green.
fn normalize(
    camera: [SpectralCurve; 3],
    leds: [SpectralCurve; 3],
    illuminant: SpectralCurve,
    reflectances: Vec<SpectralCurve>,
) -> Result<OracleScene> {
    let flat = SpectralCurve::constant(1.0)?;
    let white_g: f64 = leds
        .iter()
        .map(|l| integrate_response(&camera, l, &flat)[1])
        .sum();
    let [a, b, c] = leds.each_ref().map(|l| l.scaled(1.0 / white_g));
    let leds = [a?, b?, c?];
    let illum_g = integrate_response(&camera, &illuminant, &flat)[1];
    if !(illum_g > 0.0) {
        return Err(SpectralError::Scene("illuminant invisible to the camera".into()));
    }
    let illuminant = illuminant.scaled(1.0 / illum_g)?;
    OracleScene::new(camera, leds, illuminant, reflectances, DEFAULT_WHITE_INDEX)
}

/// Deterministic scene for `seed`: the default stage (LEDs at 630/525/465 nm,
/// camera bands at 600/540/460 nm), a seeded chart, and an illuminant of the
/// given class.
pub fn build_scene(scenario: Scenario, seed: u64) -> Result<OracleScene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let camera = bands(CAMERA_BANDS)?;
    let leds = bands(STAGE_LEDS)?;
    let reflectances = chart_reflectances(&mut rng)?;
    let illuminant = match scenario {
        Scenario::Broad => {
            let tilt = rng.gen_range(-0.5..0.5);
            let bow = rng.gen_range(-0.3..0.1);
            SpectralCurve::from_fn(|l| {
                let t = (l - 560.0) / 200.0;
                (1.0 + tilt * t + bow * t * t).max(0.0)
            })?
        }
        Scenario::RgbLed => {
            let mut mix = SpectralCurve::zero();
            for &(center, fwhm) in &STAGE_LEDS {
                let band = make_gaussian_band(
                    center + rng.gen_range(-2.0..2.0),
                    fwhm * rng.gen_range(0.95..1.1),
                    rng.gen_range(0.7..1.3),
                )?;
                mix = mix.combine(1.0, &band, 1.0)?;
            }
            mix
        }
        Scenario::Monochromatic => {
            let idx = ((SODIUM_LINE_NM - super::GRID_START_NM) / super::GRID_STEP_NM).round();
            let mut v = [0.0; GRID_LEN];
            v[idx as usize] = 1.0;
            SpectralCurve::new(v)?
        }
    };
    normalize(camera, leds, illuminant, reflectances)
}

/// Scene with randomized stage, camera, chart and broad illuminant, for
/// property checks across many instances.
pub fn random_scene(seed: u64) -> Result<OracleScene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leds = bands(STAGE_LEDS.map(|(c, w)| {
        (c + rng.gen_range(-15.0..15.0), w * rng.gen_range(0.75..1.75))
    }))?;
    let camera = bands(CAMERA_BANDS.map(|(c, w)| {
        (c + rng.gen_range(-20.0..20.0), w * rng.gen_range(0.7..1.3))
    }))?;
    let mut reflectances = Vec::with_capacity(PATCH_COUNT);
    for _ in 0..PATCH_COUNT - NEUTRAL_REFLECTANCES.len() {
        let base = rng.gen_range(0.02..0.15);
        let bumps: Vec<(f64, f64, f64)> = (0..rng.gen_range(2..=3))
            .map(|_| {
                (
                    rng.gen_range(400.0..760.0),
                    rng.gen_range(30.0..200.0),
                    rng.gen_range(0.05..0.6),
                )
            })
            .collect();
        reflectances.push(SpectralCurve::from_fn(|l| {
            let v: f64 = base + bumps.iter().map(|&(c, w, a)| a * gaussian(l, c, w)).sum::<f64>();
            v.min(1.0)
        })?);
    }
    for r in NEUTRAL_REFLECTANCES {
        reflectances.push(SpectralCurve::constant(r)?);
    }
    let tilt = rng.gen_range(-0.6..0.6);
    let illuminant = SpectralCurve::from_fn(|l| {
        let t = (l - 560.0) / 200.0;
        (1.0 + tilt * t).max(0.0)
    })?;
    normalize(camera, leds, illuminant, reflectances)
}

#[derive(Serialize, Deserialize)]
struct SceneManifest {
    grid_start_nm: f64,
    grid_step_nm: f64,
    grid_len: usize,
    white_index: usize,
    camera: [String; 3],
    leds: [String; 3],
    illuminant: String,
    reflectances: Vec<String>,
}

/// Writes the scene as one CSV per curve plus `manifest.json`.
pub fn write_scene_dir(dir: impl AsRef<Path>, scene: &OracleScene) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| SpectralError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let manifest = SceneManifest {
        grid_start_nm: super::GRID_START_NM,
        grid_step_nm: super::GRID_STEP_NM,
        grid_len: GRID_LEN,
        white_index: scene.white_index,
        camera: ["r", "g", "b"].map(|c| format!("camera_{c}.csv")),
        leds: ["r", "g", "b"].map(|c| format!("led_{c}.csv")),
        illuminant: "illuminant.csv".into(),
        reflectances: (0..PATCH_COUNT)
            .map(|j| format!("reflectance_{j:02}.csv"))
            .collect(),
    };
    for (name, curve) in manifest.camera.iter().zip(&scene.camera) {
        write_curve_csv(dir.join(name), curve)?;
    }
    for (name, curve) in manifest.leds.iter().zip(&scene.leds) {
        write_curve_csv(dir.join(name), curve)?;
    }
    write_curve_csv(dir.join(&manifest.illuminant), &scene.illuminant)?;
    for (name, curve) in manifest.reflectances.iter().zip(&scene.reflectances) {
        write_curve_csv(dir.join(name), curve)?;
    }
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|source| SpectralError::Io { path, source })
}

pub fn read_scene_dir(dir: impl AsRef<Path>) -> Result<OracleScene> {
    let dir = dir.as_ref();
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|source| SpectralError::Io {
        path: path.clone(),
        source,
    })?;
    let manifest: SceneManifest =
        serde_json::from_str(&text).map_err(|e| SpectralError::Scene(e.to_string()))?;
    if manifest.grid_len != GRID_LEN
        || manifest.grid_start_nm != super::GRID_START_NM
        || manifest.grid_step_nm != super::GRID_STEP_NM
    {
        return Err(SpectralError::Scene("manifest grid differs from 380–780 nm / 5 nm".into()));
    }
    let read3 = |names: &[String; 3]| -> Result<[SpectralCurve; 3]> {
        Ok([
            read_curve_csv(dir.join(&names[0]))?,
            read_curve_csv(dir.join(&names[1]))?,
            read_curve_csv(dir.join(&names[2]))?,
        ])
    };
    let reflectances = manifest
        .reflectances
        .iter()
        .map(|n| read_curve_csv(dir.join(n)))
        .collect::<Result<Vec<_>>>()?;
    OracleScene::new(
        read3(&manifest.camera)?,
        read3(&manifest.leds)?,
        read_curve_csv(dir.join(&manifest.illuminant))?,
        reflectances,
        manifest.white_index,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{simulate_lit_chart, solve_m, solve_q, UNIFORM_WEIGHTS};

    #[test]
    fn scenes_are_deterministic() {
        for s in [Scenario::Broad, Scenario::RgbLed, Scenario::Monochromatic] {
            assert_eq!(build_scene(s, 42).unwrap(), build_scene(s, 42).unwrap());
        }
        assert_ne!(
            build_scene(Scenario::Broad, 1).unwrap(),
            build_scene(Scenario::Broad, 2).unwrap()
        );
    }

    #[test]
    fn normalization() {
        let scene = build_scene(Scenario::Broad, 3).unwrap();
        let cal = oracle_calibration(&scene, 0.3).unwrap();
        let w_camera: f64 = (0..3).map(|c| cal.sl.0[1][c]).sum();
        assert!((w_camera - 1.0).abs() < 1e-12);
        assert!((cal.w_avg[1] - 1.0).abs() < 1e-12);
        let white = cal.targets.white();
        for c in 0..3 {
            assert!((white[c] - 0.9 * cal.w_avg[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_reflectance_srl_is_scaled_sl() {
        let scene = build_scene(Scenario::Broad, 5).unwrap();
        let beta = 0.311;
        let cal = oracle_calibration(&scene, beta).unwrap();
        for (k, &r) in NEUTRAL_REFLECTANCES.iter().enumerate() {
            let srl = cal.srl.get(DEFAULT_WHITE_INDEX + k);
            let expect = cal.sl.scale(beta * r);
            assert!((*srl - expect).max_abs() < 1e-12);
        }
    }

    #[test]
    fn stage_simulation_matches_direct_integration() {
        let scene = build_scene(Scenario::Broad, 11).unwrap();
        let beta = 0.311;
        let cal = oracle_calibration(&scene, beta).unwrap();
        let m = solve_m(&cal.sl, 1e6).unwrap();
        let sim = simulate_lit_chart(&cal.srl, &m, cal.w_avg, beta).unwrap();
        assert_eq!(sim.clamped, 0);
        let direct = lit_chart_under_stage(&scene, m * cal.w_avg);
        for j in 0..PATCH_COUNT {
            for c in 0..3 {
                assert!((sim.chart.patch(j)[c] - direct[j][c]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn led_mixture_illuminant_needs_no_correction() {
        // illuminant built exactly from the stage LEDs
        let base = build_scene(Scenario::Broad, 9).unwrap();
        let mut illum = SpectralCurve::zero();
        for (led, a) in base.leds.iter().zip([0.8, 1.0, 0.6]) {
            illum = illum.combine(1.0, led, a).unwrap();
        }
        let scene = OracleScene::new(
            base.camera.clone(),
            base.leds.clone(),
            illum,
            base.reflectances.clone(),
            DEFAULT_WHITE_INDEX,
        )
        .unwrap();
        let beta = 0.311;
        let cal = oracle_calibration(&scene, beta).unwrap();
        let m = solve_m(&cal.sl, 1e6).unwrap();
        let q = solve_q(&cal.srl, &m, cal.w_avg, &cal.targets, beta, &UNIFORM_WEIGHTS).unwrap();
        assert!((q.q - Mat3::IDENTITY).max_abs() < 1e-9);
    }

    #[test]
    fn scene_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let scene = build_scene(Scenario::RgbLed, 17).unwrap();
        write_scene_dir(dir.path(), &scene).unwrap();
        assert_eq!(read_scene_dir(dir.path()).unwrap(), scene);
    }

    #[test]
    fn scene_validation() {
        let s = build_scene(Scenario::Broad, 1).unwrap();
        let mut too_bright = s.reflectances.clone();
        too_bright[0] = SpectralCurve::constant(1.2).unwrap();
        assert!(OracleScene::new(s.camera.clone(), s.leds.clone(), s.illuminant.clone(), too_bright, 18).is_err());
        let dark = [SpectralCurve::zero(), s.leds[1].clone(), s.leds[2].clone()];
        assert!(OracleScene::new(s.camera.clone(), dark, s.illuminant.clone(), s.reflectances.clone(), 18).is_err());
        assert!(OracleScene::new(s.camera.clone(), s.leds.clone(), s.illuminant.clone(), s.reflectances[..23].to_vec(), 18).is_err());
        assert!("sodium".parse::<Scenario>().is_err());
        assert_eq!("rgb-led".parse::<Scenario>().unwrap(), Scenario::RgbLed);
    }
}
