//! Synthetic calibration captures rendered from the spectral oracle.

use std::fs;
use std::path::{Path, PathBuf};

use vpcal::calibration::SrlSet;
use vpcal::geometry::{compute_beta, DEFAULT_BETA_RESOLUTION, DEFAULT_HALF_EXTENT};
use vpcal::imaging::{
    write_chart_csv, write_pfm, LinearImage, Roi, CHART_COLS, CHART_ROWS,
};
use vpcal::spectral::{build_scene, oracle_calibration, write_scene_dir, OracleScene, Scenario};
use vpcal::{ChartGridSpec, Mat3, Rgb};

use crate::config::{
    BetaParams, BlackLevelInput, ChartCapture, PerChannel, PipelineConfig, TargetSource, WCamera,
    DEFAULT_DISPLAY_EXPOSURE,
};
use crate::error::{CliError, StageExt};

/// Fraction of the stage light the in-frustum panels reflect back.
pub const PANEL_ALBEDO: f64 = 0.05;

const CELL: usize = 40;
const BORDER: usize = 20;
const PRIMARY_SIDE: usize = 32;

/// Generates the scene for `scenario`/`seed` and writes its fixture.
pub fn cmd_oracle(seed: u64, scenario: Scenario, dir: &Path) -> Result<PathBuf, CliError> {
    let scene = build_scene(scenario, seed).stage("oracle")?;
    write_fixture(&scene, dir)
}

/// Writes calibration captures of `scene` plus a `config.json` that solves
/// them with default settings; returns the config path.
///
/// Captures: `primaries.pfm` (three flat swatches), `chart_{red,green,blue}.pfm`
/// (flat 6×4 charts under each LED channel, on a black border), `target.csv`,
/// and `black.pfm`, the in-frustum panels showing black while reflecting
/// [`PANEL_ALBEDO`] of the environment tint, at the display exposure.
pub fn write_fixture(scene: &OracleScene, dir: &Path) -> Result<PathBuf, CliError> {
    let beta = compute_beta(DEFAULT_HALF_EXTENT, DEFAULT_BETA_RESOLUTION).stage("oracle")?;
    let cal = oracle_calibration(scene, beta).stage("oracle")?;
    fs::create_dir_all(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))
        .stage("oracle")?;

    let primaries = primary_image(&cal.sl).stage("oracle")?;
    write_pfm(dir.join("primaries.pfm"), &primaries).stage("oracle")?;
    let rois = (0..3).map(|c| {
        let x0 = c * PRIMARY_SIDE + PRIMARY_SIDE / 4;
        Roi::new(x0, PRIMARY_SIDE / 4, x0 + PRIMARY_SIDE / 2, 3 * PRIMARY_SIDE / 4)
    });
    let rois: Vec<Roi> = rois.collect();

    let white_index = scene.white_index;
    let grid = ChartGridSpec::axis_aligned(
        BORDER as f64,
        BORDER as f64,
        (BORDER + CHART_COLS * CELL) as f64,
        (BORDER + CHART_ROWS * CELL) as f64,
    )
    .and_then(|g| g.with_white_index(white_index))
    .stage("oracle")?;
    let names = ["red", "green", "blue"];
    for (c, name) in names.iter().enumerate() {
        let image = chart_image(&cal.srl, c).stage("oracle")?;
        write_pfm(dir.join(format!("chart_{name}.pfm")), &image).stage("oracle")?;
    }
    write_chart_csv(dir.join("target.csv"), &cal.targets).stage("oracle")?;

    let b_camera = cal.w_avg.map(|v| PANEL_ALBEDO * DEFAULT_DISPLAY_EXPOSURE * v);
    let black = LinearImage::filled(PRIMARY_SIDE, PRIMARY_SIDE, b_camera.map(|v| v as f32))
        .stage("oracle")?;
    write_pfm(dir.join("black.pfm"), &black).stage("oracle")?;
    write_scene_dir(dir.join("scene"), scene).stage("oracle")?;

    let capture = |name: &str| ChartCapture {
        image: PathBuf::from(format!("chart_{name}.pfm")),
        grid: grid.clone(),
    };
    let cfg = PipelineConfig {
        primary_image: "primaries.pfm".into(),
        primary_rois: PerChannel { red: rois[0], green: rois[1], blue: rois[2] },
        channel_charts: PerChannel {
            red: capture("red"),
            green: capture("green"),
            blue: capture("blue"),
        },
        target: TargetSource::Csv { csv: "target.csv".into() },
        white_patch_rgb: None,
        env_map: None,
        env_facing: None,
        beta: BetaParams::default(),
        white_reflectance: vpcal::geometry::DEFAULT_WHITE_REFLECTANCE,
        cond_limit_sl: vpcal::calibration::DEFAULT_COND_LIMIT_SL,
        cond_limit_q: vpcal::calibration::DEFAULT_COND_LIMIT_Q,
        weights: vpcal::calibration::UNIFORM_WEIGHTS.to_vec(),
        white_index,
        black_level: Some(BlackLevelInput {
            image: "black.pfm".into(),
            roi: Roi::new(0, 0, PRIMARY_SIDE, PRIMARY_SIDE),
            w_camera: WCamera::PrimarySum,
        }),
        display_exposure: DEFAULT_DISPLAY_EXPOSURE,
        output_dir: "out".into(),
    };
    let path = dir.join("config.json");
    crate::config::write_config(&path, &cfg)?;
    Ok(path)
}

fn to_px(rgb: Rgb) -> [f32; 3] {
    rgb.map(|v| v as f32)
}

/// Three flat swatches side by side, the camera's view of each primary.
fn primary_image(sl: &Mat3) -> vpcal::imaging::Result<LinearImage> {
    let cols = [sl.column(0), sl.column(1), sl.column(2)].map(to_px);
    LinearImage::from_fn(3 * PRIMARY_SIDE, PRIMARY_SIDE, |x, _| cols[x / PRIMARY_SIDE])
}

/// The chart under LED channel `c`: patch `j` is column `c` of `[SRL]_j`.
fn chart_image(srl: &SrlSet, c: usize) -> vpcal::imaging::Result<LinearImage> {
    let patches: Vec<[f32; 3]> = srl.matrices().iter().map(|m| to_px(m.column(c))).collect();
    let (w, h) = (2 * BORDER + CHART_COLS * CELL, 2 * BORDER + CHART_ROWS * CELL);
    LinearImage::from_fn(w, h, |x, y| {
        let inside = (BORDER..BORDER + CHART_COLS * CELL).contains(&x)
            && (BORDER..BORDER + CHART_ROWS * CELL).contains(&y);
        if inside {
            patches[((y - BORDER) / CELL) * CHART_COLS + (x - BORDER) / CELL]
        } else {
            [0.0; 3]
        }
    })
}
